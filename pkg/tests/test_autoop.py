import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilateral_il.autoop import (
    AutoOpConfig,
    EvalReport,
    ReplayModel,
    autocorrelation_period,
    autoop_config,
    autonomous_step,
    contact_duty,
    evaluate_episode,
    read_report,
    run_autonomous,
    start_loop,
    write_report,
)
from bilateral_il.config import ExperimentConfig
from bilateral_il.control import GainSet
from bilateral_il.demo import run_demonstration
from bilateral_il.episode import LogBuilder
from bilateral_il.sim import JointState


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.0, 6.0))
def test_period_of_sine(period, phase):
    dt = 0.001
    t = np.arange(int(6 * period / dt)) * dt
    est = autocorrelation_period(np.sin(2 * np.pi * t / period + phase), dt)
    assert est == pytest.approx(period, rel=0.01)


def test_period_absent_for_flat_or_short_signals():
    assert autocorrelation_period(np.ones(1000), 0.001) is None
    t = np.arange(1000) * 0.001
    assert autocorrelation_period(np.sin(2 * np.pi * t / 0.8), 0.001) is None


def test_config_schedule_validation():
    cfg = autoop_config(ExperimentConfig(), schedule=[[0, 0.48], [2.0, 0.53]])
    assert cfg.mop_length_at(1.999) == 0.48
    assert cfg.mop_length_at(2.0) == 0.53
    assert cfg.stride == 20
    with pytest.raises(ValueError):
        AutoOpConfig(cfg.gains, cfg.env, cfg.robot, 1.0, mop_schedule=((1.0, 0.48),))
    with pytest.raises(ValueError):
        AutoOpConfig(cfg.gains, cfg.env, cfg.robot, 1.0, nn_period=0.0155)


def test_prediction_held_between_calls_and_bad_output_flagged():
    gains = GainSet.from_table(3)
    theta = np.array([0.1, -1.2, 0.8])
    loop = start_loop(theta, gains, 0.001)
    slave = JointState.at_rest(theta)
    calls = []
    target = JointState.at_rest(theta + 0.1)

    def model(s):
        calls.append(s)
        return None if len(calls) == 2 else target

    cmds = []
    for _ in range(5):
        v, loop = autonomous_step(loop, slave, model, gains, 0.001, 2)
        cmds.append(v)
    assert len(calls) == 3
    assert loop.flags == 1
    # tick 2 had a bad prediction, so the tick-1 command is held
    assert np.array_equal(cmds[2], cmds[1])
    assert np.any(cmds[0] != 0)


def test_replay_model_reproduces_demo_slave():
    cfg = ExperimentConfig()
    cfg.operator.approach_duration = 1.0
    cfg.operator.episode_duration = 2.0
    cfg.autoop.duration = 2.0
    demo = run_demonstration(cfg, 0.48)
    auto = autoop_config(cfg, mop_length=0.48)
    log, report = run_autonomous(auto, ReplayModel(demo, auto.stride))
    assert np.sqrt(np.mean((log.slave[:, :3] - demo.slave[:, :3]) ** 2)) < 0.01
    assert np.all(log.vel_cmd_m == 0)
    assert log.meta["nn_flags"] == 0
    assert report.wipe_samples == 1000


def synthetic_log(k=4000):
    b = LogBuilder(3, 0.001, {"wipe_start": 1.0})
    for i in range(k):
        t = i * 0.001
        th = np.array([0.0, np.sin(2 * np.pi * t / 0.5), 0.0])
        tau = np.array([0.0, 3.0 * np.cos(2 * np.pi * t / 0.5), 1.0])
        s = JointState(th, np.zeros(3), tau)
        m = JointState(th + 0.01, np.zeros(3), -tau)
        fy = 5.0 if i % 4 else 0.0
        b.append(t, m, s, np.zeros(3), np.zeros(3), 0.48, np.array([0.0, fy]))
    return b.build()


def test_evaluate_synthetic_episode():
    rep = evaluate_episode(synthetic_log())
    assert rep.wipe_samples == 3000
    assert rep.duty_cycle == pytest.approx(0.75)
    assert rep.mean_force == pytest.approx(3.75)
    assert rep.period == pytest.approx(0.5, rel=0.01)
    assert rep.extension_amplitude() == pytest.approx(6.0, rel=1e-3)
    assert rep.torque_amplitude[2] == 0
    assert rep.sync_mean == pytest.approx(0.01)


def test_contact_duty_window():
    log = synthetic_log()
    assert contact_duty(log, 2.0, 3.0) == pytest.approx(0.75)
    assert contact_duty(log, 9.0, 10.0) == 0.0


def test_report_round_trip(tmp_path):
    rep = evaluate_episode(synthetic_log())
    write_report(rep, tmp_path / "r.txt", "seed: 0\n")
    back = read_report(tmp_path / "r.txt")
    assert back.to_text() == rep.to_text()


def test_report_without_period():
    rep = EvalReport(torque_amplitude=np.zeros(3))
    assert "period=absent" in rep.to_text()
