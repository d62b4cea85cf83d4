"""Command-line entry point: ``bilateral-il demo | train | run | eval | export``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
Every output file carries the effective config as ``# config`` comment lines.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

from .autoop import autoop_config, evaluate_episode, run_autonomous, write_report
from .config import PROFILES, load_config
from .demo import build_dataset, read_dataset, run_demonstration, write_dataset
from .episode import FLOAT_FMT, read_episode, write_episode
from .errors import ConfigError, DivergenceError, NumericalError
from .learn.predict import Predictor, load_model, save_model
from .learn.train import train, write_history

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("bilateral_il")


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _need_file(path, what):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{what} not found: {p}")
    return p


def cmd_demo(args):
    cfg = _load(args)
    if args.episodes is not None:
        if args.episodes < 0:
            raise ConfigError("--episodes must be >= 0")
        cfg.demo.episodes = args.episodes
    cfg.validate()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prov = cfg.to_yaml()
    logs = []
    for i, length in enumerate(cfg.demo_mop_lengths()):
        log.info("demonstration %d with mop length %.4f m", i, length)
        try:
            episode = run_demonstration(cfg, length, episode=i)
        except DivergenceError as exc:
            write_episode(exc.partial, out / f"episode_{i:03d}.partial.csv", prov)
            raise
        write_episode(episode, out / f"episode_{i:03d}.csv", prov)
        logs.append(episode)
    write_dataset(build_dataset(logs, cfg.nn_stride()) if logs else [], out / "dataset.csv", prov)
    return EXIT_OK


def cmd_train(args):
    cfg = _load(args)
    if args.profile is not None:
        cfg.train.profile = args.profile
    if args.epochs is not None:
        cfg.train.epochs = args.epochs
    cfg.validate()
    pairs = read_dataset(_need_file(args.dataset, "dataset"))
    if not pairs:
        raise ConfigError(f"dataset {args.dataset} holds no sequences")
    model, stats, history = train(pairs, cfg.train_config(),
                                  callback=lambda r: log.info("epoch %d train %.3e val %.3e",
                                                              r.epoch, r.train_loss, r.val_loss))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(out, model, stats)
    history_path = Path(args.history) if args.history else out.with_suffix(".loss.csv")
    write_history(history, history_path, cfg.to_yaml())
    return EXIT_OK


def read_schedule(path):
    """Rows ``t_start,mop_length``; a non-numeric first row is taken as a header."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            t, length = float(parts[0]), float(parts[1])
        except (ValueError, IndexError):
            if rows:
                raise ConfigError(f"{path}: bad schedule row {line!r}")
            continue
        rows.append([t, length])
    if not rows:
        raise ConfigError(f"{path}: empty schedule")
    return rows


def cmd_run(args):
    cfg = _load(args)
    schedule = None
    if args.schedule:
        schedule = read_schedule(_need_file(args.schedule, "schedule file"))
    elif args.mop_length is not None:
        schedule = [[0.0, args.mop_length]]
    if schedule is not None:
        cfg.autoop.mop_schedule = schedule
    if args.duration is not None:
        cfg.autoop.duration = args.duration
    cfg.validate()
    model, stats, _ = load_model(_need_file(args.model, "model file"))
    auto = autoop_config(cfg, model_path=args.model)
    prov = cfg.to_yaml()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        episode, report = run_autonomous(auto, Predictor(model, stats))
    except DivergenceError as exc:
        write_episode(exc.partial, out.with_suffix(".partial.csv"), prov)
        raise
    write_episode(episode, out, prov)
    report_path = Path(args.report) if args.report else out.with_suffix(".report.txt")
    write_report(report, report_path, prov)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_eval(args):
    for path in args.episodes:
        episode = read_episode(_need_file(path, "episode file"))
        report = evaluate_episode(episode, wipe_start=args.wipe_start)
        if args.out:
            target = Path(args.out)
            if len(args.episodes) > 1:
                target = target / (Path(path).stem + ".report.txt")
            target.parent.mkdir(parents=True, exist_ok=True)
            write_report(report, target)
        if len(args.episodes) > 1:
            sys.stdout.write(f"# {path}\n")
        sys.stdout.write(report.to_text())
    return EXIT_OK


EXPORT_COLUMNS = ["t", "joint", "value", "run_id"]


def export_rows(episode, what, side, run_id):
    n = episode.n_joints
    data = episode.slave if side == "slave" else episode.master
    block = data[:, :n] if what == "angles" else data[:, 2 * n:]
    return [(episode.t[k], j, block[k, j], run_id) for k in range(len(episode)) for j in range(n)]


def write_export(rows, path):
    buf = io.StringIO()
    buf.write(",".join(EXPORT_COLUMNS) + "\n")
    for t, j, v, run_id in rows:
        buf.write(f"{FLOAT_FMT % t},{j},{FLOAT_FMT % v},{run_id}\n")
    Path(path).write_text(buf.getvalue())


def read_export(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != EXPORT_COLUMNS:
            raise ValueError(f"{path}: expected columns {EXPORT_COLUMNS}")
        return [(float(r["t"]), int(r["joint"]), float(r["value"]), r["run_id"]) for r in reader]


def cmd_export(args):
    rows = []
    for path in args.episodes:
        episode = read_episode(_need_file(path, "episode file"))
        rows += export_rows(episode, args.what, args.side, Path(path).stem)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_export(rows, out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="bilateral-il",
                                description="Bilateral-control imitation learning: demo, train, run, eval, export.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML config file (defaults if omitted)")
        sp.add_argument("--seed", type=int, help="override the config seed")

    d = sub.add_parser("demo", help="collect scripted teleoperation demonstrations")
    common(d)
    d.add_argument("--episodes", type=int, help="number of demonstrations (default from config: 15)")
    d.add_argument("--out", default="demos", help="output directory")
    d.set_defaults(func=cmd_demo)

    t = sub.add_parser("train", help="train the master-response predictor")
    common(t)
    t.add_argument("dataset", help="dataset CSV written by 'demo'")
    t.add_argument("--out", default="model.bin", help="model file")
    t.add_argument("--history", help="loss-history CSV (default: <out>.loss.csv)")
    t.add_argument("--profile", choices=sorted(PROFILES), help="model size preset")
    t.add_argument("--epochs", type=int)
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("run", help="autonomous rollout with a trained model")
    common(r)
    r.add_argument("--model", required=True)
    g = r.add_mutually_exclusive_group()
    g.add_argument("--mop-length", type=float, help="constant mop length in m")
    g.add_argument("--schedule", help="CSV of t_start,mop_length rows")
    r.add_argument("--duration", type=float, help="rollout length in s")
    r.add_argument("--out", default="run.csv", help="episode CSV")
    r.add_argument("--report", help="report file (default: <out>.report.txt)")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="evaluate episode logs")
    e.add_argument("episodes", nargs="+")
    e.add_argument("--wipe-start", type=float, help="override the wipe start time (s)")
    e.add_argument("--out", help="report file, or directory for several episodes")
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("export", help="tidy CSV of angle or torque traces for plotting")
    x.add_argument("episodes", nargs="+")
    x.add_argument("--what", choices=["angles", "torques"], default="angles")
    x.add_argument("--side", choices=["slave", "master"], default="slave")
    x.add_argument("--out", default="export.csv")
    x.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
