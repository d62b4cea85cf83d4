"""Four-channel bilateral control for velocity-commanded robots.

Each robot runs the same per-side pipeline every control tick:

    measure:  pseudo-differentiate the encoder angle
    actuate:  torque reference from own and partner responses
              + disturbance-observer compensation
              -> admittance 1/(M s + D) -> velocity command

In autonomous operation the partner of the slave is the predicted master,
and the slave side runs exactly the same ``measure``/``actuate`` code.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .filters import (
    AdmittanceParams,
    DobState,
    FilterState,
    admittance_step,
    dob_step,
    pseudo_derivative_step,
)
from .sim import InertiaParams, JointState

# Controller gains of the 6-DOF arm, base to tip.
TABLE_KP = (9.0, 16.0, 16.0, 4.0, 9.0, 16.0)
TABLE_KD = (6.0, 8.0, 8.0, 4.0, 6.0, 8.0)
TABLE_KF = (0.13, 0.05, 0.05, 0.10, 0.2, 0.2)
TABLE_M = (0.2, 0.5, 0.5, 0.3, 0.1, 0.1)
TABLE_OMEGA = 30.0
TABLE_G = 20.0
TABLE_G_DOB = 10.0


@dataclass(frozen=True, eq=False)
class GainSet:
    kp: np.ndarray
    kd: np.ndarray
    kf: np.ndarray
    inertia: InertiaParams
    admittance: AdmittanceParams
    g: float = TABLE_G
    g_dob: float = TABLE_G_DOB
    dob_enabled: bool = True

    def __post_init__(self):
        for name in ("kp", "kd", "kf"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != self.inertia.j.shape:
                raise ValueError(f"{name} has {v.size} entries, expected {self.inertia.n}")
            if np.any(~np.isfinite(v)) or np.any(v < 0):
                raise ValueError(f"{name} must be finite and >= 0")
            object.__setattr__(self, name, v)
        if np.any(self.kp <= 0) or np.any(self.kd <= 0):
            raise ValueError("kp and kd must be > 0 for actuated joints")
        if self.admittance.m.shape != self.inertia.j.shape:
            raise ValueError("virtual mass count differs from joint count")
        if not (self.g > 0 and self.g_dob > 0):
            raise ValueError("cutoffs g and g_dob must be > 0")

    @classmethod
    def from_table(cls, n_joints=3, **overrides):
        sl = slice(0, n_joints)
        kwargs = dict(
            kp=np.array(TABLE_KP[sl]),
            kd=np.array(TABLE_KD[sl]),
            kf=np.array(TABLE_KF[sl]),
            inertia=InertiaParams.from_table(n_joints),
            admittance=AdmittanceParams(np.array(TABLE_M[sl]), TABLE_OMEGA),
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    @property
    def n(self):
        return self.inertia.n


def side_torque_ref(own, other, gains):
    """Torque reference of one side given its partner's responses.

    ``J (Kp + Kd s)(theta_other - theta_own) - Kf (tau_own + tau_other)``;
    the ``s`` term uses the already pseudo-differentiated velocities.
    """
    j = gains.inertia.j
    position = j * (gains.kp * (other.theta - own.theta) + gains.kd * (other.dtheta - own.dtheta))
    force = gains.kf * (own.tau + other.tau)
    return position - force


def bilateral_torque_refs(master, slave, gains):
    """``(tau_m_ref, tau_s_ref)`` of four-channel bilateral control."""
    return side_torque_ref(master, slave, gains), side_torque_ref(slave, master, gains)


def autonomous_torque_ref(pred_master, slave, gains):
    """Slave torque reference with the master replaced by a prediction."""
    return side_torque_ref(slave, pred_master, gains)


@dataclass(frozen=True, eq=False)
class SideState:
    """Filter bank of one robot."""

    pd: FilterState
    adm: FilterState
    dob: DobState
    # admittance input of the previous tick, fed to the observer
    last_u: np.ndarray

    @classmethod
    def at_rest(cls, theta0, gains, dt):
        n = gains.n
        return cls(
            pd=FilterState.at_rest(theta0, gains.g, dt),
            adm=FilterState.zeros(gains.admittance.omega, dt, n),
            dob=DobState.zeros(gains.g_dob, dt, n),
            last_u=np.zeros(n),
        )


@dataclass(frozen=True, eq=False)
class ControllerTickState:
    slave: SideState
    master: SideState | None = None
    # last measured responses, kept for logging
    slave_meas: JointState | None = field(default=None)
    master_meas: JointState | None = field(default=None)

    @classmethod
    def at_rest(cls, theta_slave, gains, dt, theta_master=None):
        master = None if theta_master is None else SideState.at_rest(theta_master, gains, dt)
        return cls(slave=SideState.at_rest(theta_slave, gains, dt), master=master)


def measure(side, raw, dt):
    """Measured response: encoder angle, pseudo-derivative velocity, sensor torque."""
    dtheta, pd = pseudo_derivative_step(side.pd, raw.theta, dt)
    return JointState(raw.theta, dtheta, raw.tau), replace(side, pd=pd)


def actuate(side, own, other, gains, dt):
    """Velocity command of one side from measured own/partner responses."""
    tau_ref = side_torque_ref(own, other, gains)
    dob = side.dob
    if gains.dob_enabled:
        d_hat, dob = dob_step(side.dob, own.dtheta, side.last_u, gains.inertia, dt)
        u = tau_ref + d_hat
    else:
        u = tau_ref
    vel_cmd, adm = admittance_step(side.adm, u, gains.admittance, dt)
    return vel_cmd, SideState(side.pd, adm, dob, u)


def controller_tick(tick_state, master, slave, gains, dt, *, autonomous=False):
    """One control period for both sides (or the slave alone).

    In bilateral mode ``master`` and ``slave`` are raw robot states. In
    autonomous mode ``master`` is the predicted master response, used as
    given; only the slave command is produced and ``vel_cmd_m`` is ``None``.

    Returns ``(vel_cmd_m, vel_cmd_s, tick_state')``.
    """
    slave_meas, slave_side = measure(tick_state.slave, slave, dt)
    if autonomous:
        vel_s, slave_side = actuate(slave_side, slave_meas, master, gains, dt)
        return None, vel_s, ControllerTickState(slave_side, None, slave_meas, master)

    if tick_state.master is None:
        raise ValueError("bilateral tick needs a master filter bank")
    master_meas, master_side = measure(tick_state.master, master, dt)
    vel_m, master_side = actuate(master_side, master_meas, slave_meas, gains, dt)
    vel_s, slave_side = actuate(slave_side, slave_meas, master_meas, gains, dt)
    return vel_m, vel_s, ControllerTickState(slave_side, master_side, slave_meas, master_meas)
