"""Teacher-data collection with a scripted operator.

A virtual operator holds the master's handle through a Cartesian
impedance and drives it along an approach-then-wipe trajectory while the
four-channel controller couples master and slave. Only the slave touches
the desk. The logged master/slave responses are the teacher data.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import demo_mop_lengths
from .control import ControllerTickState, controller_tick
from .episode import FLOAT_FMT, LogBuilder
from .errors import DivergenceError
from .sim import (
    contact_force,
    forward_kinematics,
    grasp_jacobian,
    grasp_pose,
    jacobian,
    velocity_servo_step,
)

DIVERGENCE_FACTOR = 10.0


@dataclass(frozen=True, eq=False)
class OperatorScript:
    """Grasp-point trajectory and impedance of the scripted operator.

    The operator holds the handle like a person would: it moves the grasp
    point along the same path whatever the mop length and tilts the mop
    until its tip sits ``press_depth`` below the desk surface. The depth is
    chosen for an equal wrist moment across mop lengths, so the desk force
    grows as the mop's horizontal reach shrinks.
    """

    wipe_amplitude: float
    wipe_frequency: float
    press_force_target: float
    approach_duration: float
    episode_duration: float
    stiffness: np.ndarray  # x, y, angle
    damping: np.ndarray
    start_pose: np.ndarray
    wipe_center_x: float
    grasp_height: float
    mop_angle: float
    press_depth: float

    def __post_init__(self):
        if self.approach_duration <= 0 or self.episode_duration < 0:
            raise ValueError("approach_duration must be > 0 and episode_duration >= 0")
        if self.wipe_frequency <= 0:
            raise ValueError("wipe_frequency must be > 0")

    @property
    def contact_pose(self):
        return np.array([self.wipe_center_x, self.grasp_height, self.mop_angle])

    def ramp(self, t):
        if t >= self.approach_duration:
            return 1.0
        s = t / self.approach_duration
        return s * s * (3.0 - 2.0 * s)

    def desired_pose(self, t):
        """Smoothstep from the start pose to the mopping posture, then a sinusoidal wipe."""
        if t < self.approach_duration:
            return self.start_pose + self.ramp(t) * (self.contact_pose - self.start_pose)
        phase = 2.0 * np.pi * self.wipe_frequency * (t - self.approach_duration)
        pose = self.contact_pose.copy()
        pose[0] += self.wipe_amplitude * np.sin(phase)
        return pose


def contact_angle(grasp_height, desk_height, length, depth=0.0):
    """Mop angle that puts the tip of a mop held at ``grasp_height`` ``depth`` below the desk."""
    drop = grasp_height - desk_height + depth
    if not 0 < drop < length:
        raise ValueError(f"a {length} m mop cannot reach {drop} m below the grasp")
    return -np.arcsin(drop / length)


def press_force(config, env, press_force_target):
    """Desk force for an equal wrist moment: ``F L cos(phi)`` is the same for every mop length."""
    op = config.operator
    drop = op.grasp_drop
    reach_ref = np.sqrt(op.reference_length**2 - drop**2)
    reach = np.sqrt(env.mop_length**2 - drop**2)
    return press_force_target * reach_ref / reach


def make_script(config, env, rng=None):
    """Operator script; ``rng`` jitters wipe amplitude, speed and press force."""
    op = config.operator
    scale = np.ones(3)
    if rng is not None and op.jitter > 0:
        scale = 1.0 + rng.uniform(-op.jitter, op.jitter, size=3)
    force = press_force(config, env, op.press_force_target * scale[2])
    depth = force / env.contact_stiffness
    grasp_height = env.desk_height + op.grasp_drop
    return OperatorScript(
        wipe_amplitude=op.wipe_amplitude * scale[0],
        wipe_frequency=op.wipe_frequency * scale[1],
        press_force_target=force,
        approach_duration=op.approach_duration,
        episode_duration=op.episode_duration,
        stiffness=np.array(op.stiffness, dtype=float),
        damping=np.array(op.damping, dtype=float),
        start_pose=grasp_pose(config.robot.initial_theta, env),
        wipe_center_x=op.wipe_center_x,
        grasp_height=grasp_height,
        mop_angle=contact_angle(grasp_height, env.desk_height, env.mop_length, depth),
        press_depth=depth,
    )


def operator_spring_torque(t, master, script, env):
    jac = grasp_jacobian(master.theta, env)
    return jac.T @ (script.stiffness * (script.desired_pose(t) - grasp_pose(master.theta, env)))


def virtual_operator_torque(t, master, script, env):
    """Joint torque the operator exerts on the master at time ``t``.

    ``Jg^T (K (x_des - x) - D xdot)`` with ``x`` the grasp pose.
    """
    damping = operator_joint_damping(master, script, env)
    return operator_spring_torque(t, master, script, env) - damping @ master.dtheta


def operator_joint_damping(master, script, env):
    """Joint-space matrix of the operator's damping, ``Jg^T D Jg``."""
    jac = grasp_jacobian(master.theta, env)
    return jac.T @ (script.damping[:, None] * jac)


def slave_contact(slave, env):
    """Desk reaction force on the slave tip and the joint torque it causes."""
    jac = jacobian(slave.theta, env)
    force = contact_force(forward_kinematics(slave.theta, env), jac @ slave.dtheta, env)
    return force, jac.T @ force


def check_divergence(vel_cmds, limit, t, builder):
    for v in vel_cmds:
        if not np.all(np.isfinite(v)) or np.max(np.abs(v)) > DIVERGENCE_FACTOR * limit:
            raise DivergenceError(
                f"simulation diverged at t={t:.3f}s: velocity command {v} exceeds "
                f"{DIVERGENCE_FACTOR:g} x limit {limit}", partial=builder.build())


def run_demonstration(config, mop_length=None, episode=0, contact=True):
    """One teleoperated demonstration with the given mop length.

    Per-episode randomness comes from ``(config.seed, episode)`` so episodes
    are reproducible independently of each other. ``contact=False`` removes
    the desk from the slave's world (free-motion teleoperation).
    """
    dt = config.robot.dt
    env = config.env_params(mop_length)
    gains = config.gain_set()
    rng = np.random.default_rng([config.seed, episode])
    script = make_script(config, env, rng)
    slave_env = env if contact else replace(env, desk_height=-np.inf)
    master = config.robot_sim()
    slave = config.robot_sim()
    tick = ControllerTickState.at_rest(slave.state.theta, gains, dt, master.state.theta)
    meta = {
        "episode": int(episode),
        "mode": "demo",
        "wipe_start": float(script.approach_duration),
        "wipe_frequency": float(script.wipe_frequency),
    }
    log = LogBuilder(gains.n, dt, meta)
    steps = int(round(script.episode_duration / dt))
    for k in range(steps):
        t = k * dt
        # the operator's damping is applied implicitly by the servo step
        tau_spring = operator_spring_torque(t, master.state, script, env)
        b_op = operator_joint_damping(master.state, script, env)
        force, tau_env = slave_contact(slave.state, slave_env)
        vel_m, vel_s, tick = controller_tick(tick, master.state, slave.state, gains, dt)
        log.append(t, tick.master_meas, tick.slave_meas, vel_m, vel_s, env.mop_length, force)
        check_divergence((vel_m, vel_s), master.velocity_limit, t, log)
        master = velocity_servo_step(master, vel_m, tau_spring, dt, ext_damping=b_op)
        slave = velocity_servo_step(slave, vel_s, tau_env, dt)
    return log.build()


def run_demonstrations(config, count=None):
    """``count`` demonstrations (default ``config.demo.episodes``) over the mop-length range."""
    d = config.demo
    count = d.episodes if count is None else count
    lengths = demo_mop_lengths(count, d.mop_min, d.mop_max, d.anchor_lengths)
    return [run_demonstration(config, length, episode=i) for i, length in enumerate(lengths)]


# -- dataset -------------------------------------------------------------------


@dataclass(eq=False)
class SequencePair:
    """Slave responses and the master responses one NN period later."""

    inputs: np.ndarray  # (T, 3N)
    targets: np.ndarray  # (T, 3N)
    episode: int = 0

    def __len__(self):
        return self.inputs.shape[0]


def build_dataset(episodes, horizon=20, stride=None):
    """Pair slave rows with master rows ``horizon`` ticks later on a coarse grid.

    The grid keeps every ``stride``-th log row (default: ``horizon``, i.e. the
    NN period). Input row ``k`` is the slave response at grid ``k``; its
    target is the master response at grid ``k + horizon // stride``.
    """
    stride = horizon if stride is None else stride
    if horizon < 1 or stride < 1 or horizon % stride:
        raise ValueError(f"horizon {horizon} must be a positive multiple of stride {stride}")
    shift = horizon // stride
    pairs = []
    for i, log in enumerate(episodes):
        grid = np.arange(0, len(log), stride)
        if len(grid) <= shift:
            raise ValueError(f"episode {i} has {len(log)} rows, too short for horizon {horizon}")
        ep = int(log.meta.get("episode", i))
        pairs.append(SequencePair(log.slave[grid[:-shift]].copy(), log.master[grid[shift:]].copy(), ep))
    return pairs


def dataset_columns(dim):
    return ["episode", "k"] + [f"in_{i}" for i in range(dim)] + [f"out_{i}" for i in range(dim)]


def write_dataset(pairs, path, provenance=None):
    dim = pairs[0].inputs.shape[1] if pairs else 9
    buf = io.StringIO()
    if provenance:
        buf.writelines("# config " + line + "\n" for line in provenance.rstrip("\n").split("\n"))
    buf.write(",".join(dataset_columns(dim)) + "\n")
    for p in pairs:
        k = np.arange(len(p))
        block = np.column_stack([np.full(len(p), p.episode), k, p.inputs, p.targets])
        np.savetxt(buf, block, delimiter=",", fmt=["%d", "%d"] + [FLOAT_FMT] * (2 * dim))
    Path(path).write_text(buf.getvalue())


def read_dataset(path):
    lines = [ln for ln in Path(path).read_text().split("\n") if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    dim = (len(header) - 2) // 2
    if header != dataset_columns(dim):
        raise ValueError(f"{path}: unexpected dataset columns")
    if len(lines) == 1:
        return []
    data = np.loadtxt(lines[1:], delimiter=",", ndmin=2)
    pairs = []
    ids = data[:, 0].astype(int)
    # episodes are contiguous blocks in file order
    starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
    for a, b in zip(starts, np.r_[starts[1:], len(ids)]):
        block = data[a:b]
        pairs.append(SequencePair(block[:, 2:2 + dim].copy(), block[:, 2 + dim:].copy(), int(ids[a])))
    return pairs
