"""Velocity-servo robot model and the planar mop-on-desk environment.

Both robots are N-joint mechanisms with a diagonal inertia whose joints track
a velocity command through a first-order servo. The slave additionally holds
a mop whose tip can touch a horizontal desk; contact is a spring-damper with
Coulomb friction mapped to joint torques through the Jacobian transpose.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import check_finite

# Identified joint inertias of the 6-DOF arm, base to tip.
TABLE_INERTIA = (0.939, 1.32, 1.32, 0.363, 0.196, 0.246)


@dataclass(frozen=True, eq=False)
class InertiaParams:
    j: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.j, dtype=float)
        if j.ndim != 1 or j.size == 0 or np.any(~np.isfinite(j)) or np.any(j <= 0):
            raise ValueError(f"inertia entries must be finite and > 0, got {self.j!r}")
        object.__setattr__(self, "j", j)

    @classmethod
    def from_table(cls, n_joints=3):
        if not 1 <= n_joints <= len(TABLE_INERTIA):
            raise ValueError(f"table holds {len(TABLE_INERTIA)} joints, asked for {n_joints}")
        return cls(np.array(TABLE_INERTIA[:n_joints]))

    @property
    def n(self):
        return self.j.size


@dataclass(frozen=True, eq=False)
class JointState:
    """Angle, angular velocity and joint torque of one robot."""

    theta: np.ndarray
    dtheta: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(a, dtype=float) for a in (self.theta, self.dtheta, self.tau)]
        if not (arrays[0].shape == arrays[1].shape == arrays[2].shape) or arrays[0].ndim != 1:
            raise ValueError("theta, dtheta and tau must be 1-D with equal length")
        check_finite("JointState", *arrays)
        object.__setattr__(self, "theta", arrays[0])
        object.__setattr__(self, "dtheta", arrays[1])
        object.__setattr__(self, "tau", arrays[2])

    @classmethod
    def at_rest(cls, theta):
        theta = np.asarray(theta, dtype=float)
        return cls(theta, np.zeros_like(theta), np.zeros_like(theta))

    @property
    def n(self):
        return self.theta.size

    def as_vector(self):
        """Flat layout ``[theta..., dtheta..., tau...]``."""
        return np.concatenate([self.theta, self.dtheta, self.tau])

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float)
        if v.size % 3:
            raise ValueError(f"vector length {v.size} is not a multiple of 3")
        n = v.size // 3
        return cls(v[:n].copy(), v[n : 2 * n].copy(), v[2 * n :].copy())


@dataclass(frozen=True, eq=False)
class RobotSim:
    state: JointState
    inertia: InertiaParams
    servo_time_constant: float = 0.01
    velocity_limit: float = 3.0

    def __post_init__(self):
        if not self.servo_time_constant > 0:
            raise ValueError("servo_time_constant must be > 0 (use inf to disable the servo)")
        if not self.velocity_limit > 0:
            raise ValueError("velocity_limit must be > 0")
        if self.inertia.n != self.state.n:
            raise ValueError("inertia and state joint counts differ")


@dataclass(frozen=True, eq=False)
class EnvParams:
    link_lengths: np.ndarray = field(default_factory=lambda: np.array([0.3, 0.25]))
    mop_length: float = 0.48
    desk_height: float = -0.5
    contact_stiffness: float = 1000.0
    contact_damping: float = 10.0
    friction_coeff: float = 0.3

    def __post_init__(self):
        links = np.asarray(self.link_lengths, dtype=float)
        if links.ndim != 1 or np.any(links < 0):
            raise ValueError("link_lengths must be a 1-D array of non-negative lengths")
        object.__setattr__(self, "link_lengths", links)
        if not self.mop_length > 0:
            raise ValueError("mop_length must be > 0")
        if self.contact_stiffness < 0 or self.contact_damping < 0:
            raise ValueError("contact stiffness and damping must be >= 0")
        if self.friction_coeff < 0:
            raise ValueError("friction_coeff must be >= 0")

    def with_mop(self, mop_length):
        return replace(self, mop_length=float(mop_length))


def velocity_servo_step(robot, vel_cmd, ext_torque, dt, ext_damping=None):
    """Advance one robot by ``dt`` under a velocity command.

    The joint velocity follows ``T dw/dt = vel_cmd - w`` plus the external
    torque acting on the inertia. The linear ODE is discretised exactly over
    the step (zero-order hold on both inputs), then clamped; angles use the
    new velocity (semi-implicit Euler).

    ``ext_damping`` is an optional NxN matrix ``B`` of a passive damper
    coupled to the joints (external torque ``-B w``). It is evaluated at the
    new velocity so stiff dampers stay stable at large ``dt``.
    """
    vel_cmd = np.asarray(vel_cmd, dtype=float)
    ext_torque = np.asarray(ext_torque, dtype=float)
    check_finite("velocity_servo_step", vel_cmd, ext_torque, dt)
    if not dt > 0:
        raise ValueError("dt must be > 0")
    n = robot.state.n
    if vel_cmd.shape != (n,) or ext_torque.shape != (n,):
        raise ValueError(f"expected vectors of length {n}")

    T = robot.servo_time_constant
    if np.isinf(T):
        decay, gain = 1.0, dt
    else:
        decay = np.exp(-dt / T)
        gain = T * (1.0 - decay)
    j = robot.inertia.j
    w_old = robot.state.dtheta
    w = decay * w_old + (1.0 - decay) * vel_cmd + gain * ext_torque / j
    if ext_damping is not None:
        b = np.asarray(ext_damping, dtype=float)
        w = np.linalg.solve(np.eye(n) + gain * b / j[:, None], w)
        ext_torque = ext_torque - b @ w
    lim = robot.velocity_limit
    w = np.clip(w, -lim, lim)
    theta = robot.state.theta + dt * w
    # what a link-side torque sensor reads
    tau = j * (w - w_old) / dt - ext_torque
    return replace(robot, state=JointState(theta, w, tau))


def _segments(theta, env, with_mop=True):
    theta = np.asarray(theta, dtype=float)
    n_links = env.link_lengths.size
    if theta.size < n_links or theta.size == 0:
        raise ValueError(f"need at least {max(n_links, 1)} joint angles, got {theta.size}")
    lengths = np.append(env.link_lengths, env.mop_length if with_mop else 0.0)
    # the mop rides on the joint after the last link (or on the last joint)
    n_used = min(n_links + 1, theta.size)
    phi = np.cumsum(theta[:n_used])
    seg_phi = phi[np.minimum(np.arange(lengths.size), n_used - 1)]
    return lengths, seg_phi, n_used


def _pose(theta, env, with_mop):
    lengths, seg_phi, _ = _segments(theta, env, with_mop)
    x = float(np.sum(lengths * np.cos(seg_phi)))
    y = float(np.sum(lengths * np.sin(seg_phi)))
    return np.array([x, y, seg_phi[-1]])


def _pose_jacobian(theta, env, with_mop):
    theta = np.asarray(theta, dtype=float)
    lengths, seg_phi, n_used = _segments(theta, env, with_mop)
    px = lengths * np.cos(seg_phi)
    py = lengths * np.sin(seg_phi)
    jac = np.zeros((3, theta.size))
    seg_joint = np.minimum(np.arange(lengths.size), n_used - 1)
    for i in range(n_used):
        # joint i moves every segment whose angle includes theta[i]
        moved = seg_joint >= i
        jac[0, i] = -np.sum(py[moved])
        jac[1, i] = np.sum(px[moved])
        jac[2, i] = 1.0
    return jac


def forward_kinematics(theta, env):
    """Mop-tip pose ``(x, y, angle)`` of the planar serial chain."""
    return _pose(theta, env, True)


def pose_jacobian(theta, env):
    """3xN Jacobian of the tip ``(x, y, angle)``; the last row counts contributing joints."""
    return _pose_jacobian(theta, env, True)


def grasp_pose(theta, env):
    """Pose of the grasp point (end of the last link) with the mop's angle."""
    return _pose(theta, env, False)


def grasp_jacobian(theta, env):
    return _pose_jacobian(theta, env, False)


def jacobian(theta, env):
    """2xN translational Jacobian of the mop tip."""
    return pose_jacobian(theta, env)[:2]


def contact_force(tip_pose, tip_vel, env):
    """Desk reaction on the mop tip as ``(fx, fy)``.

    Spring-damper along the desk normal, never pulling; Coulomb friction
    opposing the sliding direction.
    """
    y = tip_pose[1]
    penetration = env.desk_height - y
    if penetration <= 0:
        return np.zeros(2)
    normal = env.contact_stiffness * penetration - env.contact_damping * tip_vel[1]
    normal = max(normal, 0.0)
    tangential = -env.friction_coeff * normal * np.sign(tip_vel[0])
    return np.array([tangential, normal])


def external_joint_torque(theta, force, env):
    """Joint torques produced by a tip force (Jacobian transpose)."""
    return jacobian(theta, env).T @ np.asarray(force, dtype=float)


def tip_velocity(theta, dtheta, env):
    return jacobian(theta, env) @ dtheta
