"""Experiment configuration: YAML file -> validated, typed sections.

Every section is a dataclass; unknown keys anywhere are rejected. Defaults
reproduce the identified inertias and controller gains of the 6-DOF arm
(truncated to the simulated joint count) and a desk-scale mopping scene.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .control import TABLE_G, TABLE_G_DOB, TABLE_KD, TABLE_KF, TABLE_KP, TABLE_M, TABLE_OMEGA, GainSet
from .errors import ConfigError
from .filters import AdmittanceParams
from .sim import TABLE_INERTIA, EnvParams, InertiaParams, JointState, RobotSim


@dataclass
class RobotSection:
    n_joints: int = 3
    inertia: list | None = None
    servo_time_constant: float = 0.01
    velocity_limit: float = 3.0
    # grasp at (0.4, -0.2) with the mop tilted 0.35 rad below horizontal
    initial_theta: list = field(default_factory=lambda: [0.0952, -1.2486, 0.8033])
    dt: float = 0.001


@dataclass
class GainsSection:
    kp: list | None = None
    kd: list | None = None
    kf: list | None = None
    m: list | None = None
    omega: float = TABLE_OMEGA
    g: float = TABLE_G
    g_dob: float = TABLE_G_DOB
    dob_enabled: bool = True


@dataclass
class EnvSection:
    link_lengths: list = field(default_factory=lambda: [0.3, 0.25])
    mop_length: float = 0.48
    desk_height: float = -0.5
    contact_stiffness: float = 1000.0
    contact_damping: float = 10.0
    friction_coeff: float = 0.3


@dataclass
class OperatorSection:
    wipe_amplitude: float = 0.06
    wipe_frequency: float = 0.5
    # desk force for a mop of reference_length; others get an equal wrist moment
    press_force_target: float = 12.0
    approach_duration: float = 4.0
    episode_duration: float = 12.0
    wipe_center_x: float = 0.4
    # grasp point height above the desk while mopping
    grasp_drop: float = 0.3
    reference_length: float = 0.505
    # grasp-frame impedance: x (N/m), y (N/m), mop angle (Nm/rad)
    stiffness: list = field(default_factory=lambda: [50000.0, 50000.0, 8000.0])
    damping: list = field(default_factory=lambda: [20000.0, 20000.0, 3000.0])
    jitter: float = 0.05


@dataclass
class DemoSection:
    episodes: int = 15
    mop_min: float = 0.43
    mop_max: float = 0.58
    anchor_lengths: list = field(default_factory=lambda: [0.48, 0.53])


PROFILES = {
    "tiny": {"layers": 2, "hidden": 32},
    "full": {"layers": 4, "hidden": 200},
}


@dataclass
class TrainSection:
    profile: str = "tiny"
    layers: int | None = None
    hidden: int | None = None
    seq_len: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    epochs: int = 100
    augment_factor: int = 20
    noise_scale: float = 0.01
    val_fraction: float = 0.1
    nn_period: float = 0.02


@dataclass
class AutoopSection:
    duration: float = 12.0
    nn_period: float = 0.02
    # piecewise-constant [[t_start, mop_length], ...]
    mop_schedule: list = field(default_factory=lambda: [[0.0, 0.48]])


@dataclass
class ExperimentConfig:
    robot: RobotSection = field(default_factory=RobotSection)
    gains: GainsSection = field(default_factory=GainsSection)
    env: EnvSection = field(default_factory=EnvSection)
    operator: OperatorSection = field(default_factory=OperatorSection)
    demo: DemoSection = field(default_factory=DemoSection)
    train: TrainSection = field(default_factory=TrainSection)
    autoop: AutoopSection = field(default_factory=AutoopSection)
    seed: int = 0

    # -- builders -----------------------------------------------------------

    def inertia(self):
        n = self.robot.n_joints
        j = self.robot.inertia if self.robot.inertia is not None else TABLE_INERTIA[:n]
        return InertiaParams(np.array(j, dtype=float))

    def gain_set(self):
        n = self.robot.n_joints
        g = self.gains

        def pick(v, table):
            return np.array(v if v is not None else table[:n], dtype=float)

        return GainSet(
            kp=pick(g.kp, TABLE_KP),
            kd=pick(g.kd, TABLE_KD),
            kf=pick(g.kf, TABLE_KF),
            inertia=self.inertia(),
            admittance=AdmittanceParams(pick(g.m, TABLE_M), g.omega),
            g=g.g,
            g_dob=g.g_dob,
            dob_enabled=g.dob_enabled,
        )

    def env_params(self, mop_length=None):
        e = self.env
        return EnvParams(
            link_lengths=np.array(e.link_lengths, dtype=float),
            mop_length=e.mop_length if mop_length is None else float(mop_length),
            desk_height=e.desk_height,
            contact_stiffness=e.contact_stiffness,
            contact_damping=e.contact_damping,
            friction_coeff=e.friction_coeff,
        )

    def robot_sim(self):
        return RobotSim(
            JointState.at_rest(np.array(self.robot.initial_theta, dtype=float)),
            self.inertia(),
            servo_time_constant=self.robot.servo_time_constant,
            velocity_limit=self.robot.velocity_limit,
        )

    def model_shape(self):
        t = self.train
        preset = PROFILES[t.profile]
        return (t.layers or preset["layers"], t.hidden or preset["hidden"])

    def train_config(self):
        from .learn.train import TrainConfig

        t = self.train
        layers, hidden = self.model_shape()
        return TrainConfig(layers=layers, hidden=hidden, seq_len=t.seq_len, batch_size=t.batch_size,
                           learning_rate=t.learning_rate, epochs=t.epochs, seed=self.seed,
                           augment_factor=t.augment_factor, noise_scale=t.noise_scale,
                           val_fraction=t.val_fraction)

    def nn_stride(self, period=None):
        period = self.train.nn_period if period is None else period
        return _ratio(period, self.robot.dt, "nn_period")

    def demo_mop_lengths(self):
        return demo_mop_lengths(self.demo.episodes, self.demo.mop_min, self.demo.mop_max,
                                self.demo.anchor_lengths)

    def to_dict(self):
        return dataclasses.asdict(self)

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=True, default_flow_style=None)

    # -- validation ---------------------------------------------------------

    def validate(self):
        r = self.robot
        n = r.n_joints
        if not isinstance(n, int) or n < 1:
            raise ConfigError("robot.n_joints must be a positive integer")
        if r.inertia is None and n > len(TABLE_INERTIA):
            raise ConfigError(f"robot.inertia required for more than {len(TABLE_INERTIA)} joints")
        if len(r.initial_theta) != n:
            raise ConfigError(f"robot.initial_theta needs {n} entries")
        _positive(r, "servo_time_constant", "velocity_limit", "dt")
        env = self.env
        if n < len(env.link_lengths):
            raise ConfigError("need at least one joint per link")
        if self.operator.episode_duration < 0 or self.autoop.duration < 0:
            raise ConfigError("durations must be >= 0")
        _positive(self.operator, "wipe_frequency", "approach_duration")
        for name in ("stiffness", "damping"):
            if len(getattr(self.operator, name)) != 3:
                raise ConfigError(f"operator.{name} needs [x, y, angle] entries")
        if self.demo.episodes < 0:
            raise ConfigError("demo.episodes must be >= 0")
        if not 0 < self.demo.mop_min <= self.demo.mop_max:
            raise ConfigError("demo mop range must satisfy 0 < mop_min <= mop_max")
        t = self.train
        if t.profile not in PROFILES:
            raise ConfigError(f"train.profile must be one of {sorted(PROFILES)}")
        _positive(t, "seq_len", "batch_size", "epochs", "augment_factor", "nn_period")
        if t.learning_rate < 0 or t.noise_scale < 0:
            raise ConfigError("learning_rate and noise_scale must be >= 0")
        if not 0 <= t.val_fraction < 1:
            raise ConfigError("train.val_fraction must be in [0, 1)")
        self.nn_stride()
        self.nn_stride(self.autoop.nn_period)
        sched = self.autoop.mop_schedule
        if not sched or any(len(row) != 2 for row in sched):
            raise ConfigError("autoop.mop_schedule must be a non-empty list of [t, length]")
        times = [row[0] for row in sched]
        if times[0] != 0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("autoop.mop_schedule must start at t=0 with increasing times")
        try:
            self.gain_set()
            self.env_params()
            for _, length in sched:
                self.env_params(length)
            self.robot_sim()
            self.model_shape()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        return self


def _positive(section, *names):
    for name in names:
        v = getattr(section, name)
        if not (isinstance(v, (int, float)) and v > 0):
            raise ConfigError(f"{type(section).__name__}.{name} must be > 0, got {v!r}")


def _ratio(period, dt, name):
    ratio = period / dt
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * max(1.0, ratio):
        raise ConfigError(f"{name}={period} is not an integer multiple of dt={dt}")
    return k


def demo_mop_lengths(count, lo, hi, anchors=()):
    """Evenly spaced lengths over ``[lo, hi]``, nearest points snapped to ``anchors``."""
    if count <= 0:
        return []
    lengths = np.linspace(lo, hi, count)
    free = np.ones(count, dtype=bool)
    for a in anchors:
        if not lo <= a <= hi or not free.any():
            continue
        idx = np.flatnonzero(free)[np.argmin(np.abs(lengths[free] - a))]
        lengths[idx] = a
        free[idx] = False
    return [float(x) for x in lengths]


def _from_mapping(cls, data, path):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in {path}: {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        sub = _SECTIONS.get(name) if cls is ExperimentConfig else None
        kwargs[name] = _from_mapping(sub, value, f"{path}.{name}") if sub else value
    return cls(**kwargs)


_SECTIONS = {
    "robot": RobotSection,
    "gains": GainsSection,
    "env": EnvSection,
    "operator": OperatorSection,
    "demo": DemoSection,
    "train": TrainSection,
    "autoop": AutoopSection,
}


def config_from_dict(data):
    return _from_mapping(ExperimentConfig, data, "config").validate()


def load_config(path=None):
    """Read and validate a YAML config; ``None`` gives the defaults."""
    if path is None:
        return ExperimentConfig().validate()
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    return config_from_dict(data or {})
