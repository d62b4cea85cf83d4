"""Autonomous operation: a learned model stands in for the master.

The slave runs the demonstration slave controller unchanged (``measure``
then ``actuate``); only the partner response comes from a predictor that
is queried every NN period and held in between.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .control import ControllerTickState, actuate, measure
from .demo import check_divergence, slave_contact
from .episode import LogBuilder
from .sim import EnvParams, JointState, RobotSim, velocity_servo_step

# the joint that extends the arm toward the wipe area
EXTENSION_JOINT = 1


@dataclass(frozen=True, eq=False)
class AutoOpConfig:
    gains: object
    env: EnvParams
    robot: RobotSim
    duration: float
    dt: float = 0.001
    nn_period: float = 0.02
    # piecewise-constant ((t_start, mop_length), ...), first entry at t = 0
    mop_schedule: tuple = ((0.0, 0.48),)
    model_path: str | None = None
    wipe_start: float = 0.0
    wipe_frequency: float | None = None

    def __post_init__(self):
        ratio = self.nn_period / self.dt
        if int(round(ratio)) < 1 or abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError(f"nn_period {self.nn_period} is not an integer multiple of dt {self.dt}")
        if self.duration < 0:
            raise ValueError("duration must be >= 0")
        times = [row[0] for row in self.mop_schedule]
        if not times or times[0] != 0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("mop_schedule must start at t=0 with increasing times")

    @property
    def stride(self):
        return int(round(self.nn_period / self.dt))

    def mop_length_at(self, t):
        length = self.mop_schedule[0][1]
        for start, value in self.mop_schedule:
            if t >= start - 1e-12:
                length = value
        return float(length)


def autoop_config(config, mop_length=None, schedule=None, model_path=None):
    """Build an :class:`AutoOpConfig` from an experiment config."""
    if schedule is None:
        schedule = config.autoop.mop_schedule if mop_length is None else [[0.0, mop_length]]
    return AutoOpConfig(
        gains=config.gain_set(),
        env=config.env_params(),
        robot=config.robot_sim(),
        duration=config.autoop.duration,
        dt=config.robot.dt,
        nn_period=config.autoop.nn_period,
        mop_schedule=tuple((float(t), float(v)) for t, v in schedule),
        model_path=None if model_path is None else str(model_path),
        wipe_start=config.operator.approach_duration,
        wipe_frequency=config.operator.wipe_frequency,
    )


@dataclass(frozen=True, eq=False)
class LoopState:
    tick: ControllerTickState
    k: int = 0
    prediction: object = None
    last_cmd: np.ndarray | None = None
    flags: int = 0


def start_loop(theta0, gains, dt):
    return LoopState(ControllerTickState.at_rest(theta0, gains, dt), last_cmd=np.zeros(gains.n))


def autonomous_step(loop, slave, model, gains, dt, stride):
    """One control tick of the slave against a predicted master.

    ``model`` maps the measured slave response to a predicted master
    response, or ``None`` when its output is not finite; it is called on
    ticks ``k % stride == 0`` and its output is held in between. A bad
    prediction keeps the previous command for this tick and is counted
    in ``flags``.

    Returns ``(vel_cmd_s, loop')``.
    """
    slave_meas, side = measure(loop.tick.slave, slave, dt)
    pred, flags, bad = loop.prediction, loop.flags, False
    if loop.k % stride == 0:
        new = model(slave_meas)
        if new is None:
            flags, bad = flags + 1, True
        else:
            pred = new
    if bad or pred is None:
        vel = loop.last_cmd
    else:
        vel, side = actuate(side, slave_meas, pred, gains, dt)
    tick = ControllerTickState(side, None, slave_meas, pred)
    return vel, LoopState(tick, loop.k + 1, pred, vel, flags)


class ReplayModel:
    """Oracle that returns the recorded master response one NN period ahead."""

    def __init__(self, log, stride):
        self.master = log.master
        self.stride = stride
        self.calls = 0

    def reset(self):
        self.calls = 0

    def __call__(self, slave):
        row = min((self.calls + 1) * self.stride, len(self.master) - 1)
        self.calls += 1
        return JointState.from_vector(self.master[row])


def run_autonomous(cfg, model):
    """Closed-loop rollout of the slave with ``model`` as the master.

    Returns ``(EpisodeLog, EvalReport)``. The log's master columns hold the
    prediction in use at each tick and ``vel_cmd_m`` is zero.
    """
    if hasattr(model, "reset"):
        model.reset()
    dt = cfg.dt
    gains = cfg.gains
    slave = cfg.robot
    loop = start_loop(slave.state.theta, gains, dt)
    meta = {"mode": "auto", "wipe_start": float(cfg.wipe_start)}
    if cfg.wipe_frequency is not None:
        meta["wipe_frequency"] = float(cfg.wipe_frequency)
    log = LogBuilder(gains.n, dt, meta)
    zeros = np.zeros(gains.n)
    steps = int(round(cfg.duration / dt))
    for k in range(steps):
        t = k * dt
        env = cfg.env.with_mop(cfg.mop_length_at(t))
        force, tau_env = slave_contact(slave.state, env)
        vel, loop = autonomous_step(loop, slave.state, model, gains, dt, cfg.stride)
        master = loop.tick.master_meas
        log.append(t, master if master is not None else loop.tick.slave_meas,
                   loop.tick.slave_meas, zeros, vel, env.mop_length, force)
        check_divergence((vel,), slave.velocity_limit, t, log)
        slave = velocity_servo_step(slave, vel, tau_env, dt)
    log.meta["nn_flags"] = int(loop.flags)
    episode = log.build()
    return episode, evaluate_episode(episode)


# -- evaluation ----------------------------------------------------------------


@dataclass(eq=False)
class EvalReport:
    mean_force: float = 0.0
    duty_cycle: float = 0.0
    period: float | None = None
    torque_amplitude: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sync_mean: float = 0.0
    sync_rms: float = 0.0
    sync_max: float = 0.0
    wipe_samples: int = 0

    def extension_amplitude(self, joint=EXTENSION_JOINT):
        return float(self.torque_amplitude[joint])

    def to_text(self):
        lines = [
            f"mean_force={self.mean_force!r}",
            f"duty_cycle={self.duty_cycle!r}",
            f"period={'absent' if self.period is None else repr(self.period)}",
        ]
        lines += [f"torque_amplitude_{i}={float(a)!r}" for i, a in enumerate(self.torque_amplitude)]
        lines += [
            f"sync_mean={self.sync_mean!r}",
            f"sync_rms={self.sync_rms!r}",
            f"sync_max={self.sync_max!r}",
            f"wipe_samples={self.wipe_samples}",
        ]
        return "\n".join(lines) + "\n"


def write_report(report, path, provenance=None):
    head = ""
    if provenance:
        head = "".join("# config " + ln + "\n" for ln in provenance.rstrip("\n").split("\n"))
    Path(path).write_text(head + report.to_text())


def read_report(path):
    values = {}
    for line in Path(path).read_text().split("\n"):
        if line and not line.startswith("#"):
            key, _, value = line.partition("=")
            values[key] = value
    amps = [float(values[k]) for k in sorted((k for k in values if k.startswith("torque_amplitude_")),
                                              key=lambda k: int(k.rsplit("_", 1)[1]))]
    return EvalReport(
        mean_force=float(values["mean_force"]),
        duty_cycle=float(values["duty_cycle"]),
        period=None if values["period"] == "absent" else float(values["period"]),
        torque_amplitude=np.array(amps),
        sync_mean=float(values["sync_mean"]),
        sync_rms=float(values["sync_rms"]),
        sync_max=float(values["sync_max"]),
        wipe_samples=int(values["wipe_samples"]),
    )


def autocorrelation_period(x, dt):
    """Dominant period of ``x`` from the first autocorrelation peak.

    Returns ``None`` when the signal is flat or shorter than two periods.
    """
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = x.size
    if n < 4 or not np.any(np.abs(x) > 1e-12 * max(1.0, np.max(np.abs(x)))):
        return None
    size = 1 << int(np.ceil(np.log2(2 * n)))
    power = np.fft.rfft(x, size)
    ac = np.fft.irfft(power * np.conj(power), size)[:n]
    # unbiased estimate so later lags are not shrunk toward zero
    ac = ac / (n - np.arange(n))
    if ac[0] <= 0:
        return None
    ac = ac / ac[0]
    neg = np.flatnonzero(ac < 0)
    if neg.size == 0:
        return None
    start = neg[0]
    # only lags with at least two periods of data count
    stop = n // 2 + 1
    if start >= stop - 1:
        return None
    seg = ac[start:stop]
    top = seg.max()
    if top <= 0:
        return None
    # first hump within 80% of the highest peak; later multiples score about as high
    high = seg >= 0.8 * top
    first = int(np.argmax(high))
    end = first + (int(np.argmin(high[first:])) if not high[first:].all() else seg.size - first)
    lag = start + first + int(np.argmax(seg[first:end]))
    if lag <= start or lag >= stop - 1:
        return None
    a, b, c = ac[lag - 1], ac[lag], ac[lag + 1]
    denom = a - 2 * b + c
    shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
    return float((lag + shift) * dt)


def evaluate_episode(log, wipe_start=None, signal_joint=None):
    """Contact, periodicity, torque amplitude and synchronization metrics of a log."""
    if len(log) == 0:
        return EvalReport(torque_amplitude=np.zeros(log.n_joints))
    if wipe_start is None:
        wipe_start = float(log.meta.get("wipe_start", 0.0))
    n = log.n_joints
    wipe = log.t >= wipe_start - 1e-12
    report = EvalReport(torque_amplitude=np.zeros(n))
    diff = np.abs(log.master[:, :n] - log.slave[:, :n])
    report.sync_mean = float(diff.mean())
    report.sync_rms = float(np.sqrt(np.mean(diff * diff)))
    report.sync_max = float(diff.max())
    if not np.any(wipe):
        return report
    fy = log.force[wipe, 1]
    report.wipe_samples = int(wipe.sum())
    report.duty_cycle = float(np.mean(fy > 0))
    report.mean_force = float(fy.mean())
    tau = log.slave[wipe][:, 2 * n:]
    report.torque_amplitude = np.ptp(tau, axis=0)
    theta = log.slave[wipe][:, :n]
    if signal_joint is None:
        signal_joint = int(np.argmax(np.var(theta, axis=0)))
    report.period = autocorrelation_period(theta[:, signal_joint], log.dt)
    return report


def contact_duty(log, t0, t1):
    """Fraction of samples in ``[t0, t1)`` with the mop pressing on the desk."""
    window = (log.t >= t0 - 1e-12) & (log.t < t1 - 1e-12)
    if not np.any(window):
        return 0.0
    return float(np.mean(log.force[window, 1] > 0))
