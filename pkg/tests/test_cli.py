import numpy as np
import pytest

from bilateral_il.autoop import read_report
from bilateral_il.cli import main, read_export, read_schedule
from bilateral_il.episode import read_episode


def test_pipeline_end_to_end(tmp_path, tiny_config, capsys):
    cfg = ["--config", str(tiny_config)]
    demos = tmp_path / "demos"
    assert main(["demo", *cfg, "--out", str(demos)]) == 0
    assert sorted(p.name for p in demos.iterdir()) == ["dataset.csv", "episode_000.csv", "episode_001.csv"]
    assert "# config" in (demos / "episode_000.csv").read_text()

    model = tmp_path / "model.bin"
    assert main(["train", *cfg, str(demos / "dataset.csv"), "--out", str(model)]) == 0
    hist = (tmp_path / "model.loss.csv").read_text().splitlines()
    assert "epoch,train_loss,val_loss,best_val_loss" in hist
    assert len([ln for ln in hist if ln[:1].isdigit()]) == 2

    run = tmp_path / "run.csv"
    capsys.readouterr()
    assert main(["run", *cfg, "--model", str(model), "--mop-length", "0.53", "--out", str(run)]) == 0
    assert "duty_cycle=" in capsys.readouterr().out
    log = read_episode(run)
    assert np.all(log.mop_length == 0.53)
    report = read_report(tmp_path / "run.report.txt")
    assert report.wipe_samples == 1000

    assert main(["eval", str(demos / "episode_000.csv"), "--out", str(tmp_path / "e.txt")]) == 0
    assert read_report(tmp_path / "e.txt").duty_cycle > 0.5

    out = tmp_path / "x.csv"
    assert main(["export", str(demos / "episode_000.csv"), str(run), "--what", "torques", "--out", str(out)]) == 0
    rows = read_export(out)
    assert len(rows) == 3 * (2000 + 2000)
    assert {r[3] for r in rows} == {"episode_000", "run"}


def test_schedule_file(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("t_start,mop_length\n0,0.48\n1.5,0.53\n")
    assert read_schedule(path) == [[0.0, 0.48], [1.5, 0.53]]


def test_missing_input_exits_2(tmp_path, capsys):
    assert main(["train", str(tmp_path / "none.csv")]) == 2
    assert "none.csv" in capsys.readouterr().err
    assert main(["eval", str(tmp_path / "none.csv")]) == 2
    assert main(["run", "--model", str(tmp_path / "none.bin")]) == 2


def test_bad_config_exits_2(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("robot:\n  dt: -1\n")
    assert main(["demo", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_bad_model_file_exits_2(tmp_path):
    (tmp_path / "m.bin").write_bytes(b"junk")
    assert main(["run", "--model", str(tmp_path / "m.bin"), "--out", str(tmp_path / "r.csv")]) == 2


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == 2


def test_nonfinite_dataset_exits_3(tmp_path, tiny_config):
    demos = tmp_path / "d"
    assert main(["demo", "--config", str(tiny_config), "--episodes", "2", "--out", str(demos)]) == 0
    lines = (demos / "dataset.csv").read_text().splitlines()
    k = next(i for i, ln in enumerate(lines) if ln[:1].isdigit())
    parts = lines[k].split(",")
    parts[3] = "nan"
    lines[k] = ",".join(parts)
    (demos / "dataset.csv").write_text("\n".join(lines) + "\n")
    assert main(["train", "--config", str(tiny_config), str(demos / "dataset.csv"),
                 "--out", str(tmp_path / "m.bin")]) == 3
