"""First-order discrete-time blocks used by the controllers.

Every block is discretised with backward Euler (s -> (1 - z^-1)/dt), so each
one is unconditionally stable for any positive cutoff and step. States are
immutable; each ``*_step`` returns the output and the successor state.
Scalars and per-joint vectors are both accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import check_finite


@dataclass(frozen=True, eq=False)
class FilterState:
    y_prev: np.ndarray | float
    u_prev: np.ndarray | float
    cutoff: float
    dt: float

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be > 0, got {self.cutoff}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")

    @classmethod
    def zeros(cls, cutoff, dt, n=None):
        z = 0.0 if n is None else np.zeros(n)
        return cls(z, z, float(cutoff), float(dt))

    @classmethod
    def at_rest(cls, u0, cutoff, dt):
        """Steady state of a derivative-type block for a held input ``u0``."""
        u0 = np.asarray(u0, dtype=float)
        return cls(np.zeros_like(u0), u0.copy(), float(cutoff), float(dt))


def _check_dt(fs, dt):
    if dt != fs.dt:
        raise ValueError(f"step dt={dt} does not match filter dt={fs.dt}")


def lowpass_step(fs, u, dt):
    """g/(s+g): ``y = (y_prev + g dt u) / (1 + g dt)``."""
    check_finite("lowpass_step", u)
    _check_dt(fs, dt)
    gdt = fs.cutoff * dt
    y = (fs.y_prev + gdt * u) / (1.0 + gdt)
    return y, replace(fs, y_prev=y, u_prev=u)


def pseudo_derivative_step(fs, u, dt):
    """Band-limited derivative g s/(s+g)."""
    check_finite("pseudo_derivative_step", u)
    _check_dt(fs, dt)
    g = fs.cutoff
    y = (fs.y_prev + g * (u - fs.u_prev)) / (1.0 + g * dt)
    return y, replace(fs, y_prev=y, u_prev=u)


@dataclass(frozen=True, eq=False)
class AdmittanceParams:
    """Virtual mass per joint and the shared cutoff; damping is cutoff * mass."""

    m: np.ndarray
    omega: float

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        if np.any(~np.isfinite(m)) or np.any(m <= 0):
            raise ValueError("virtual masses must be finite and > 0")
        if not self.omega > 0:
            raise ValueError("omega must be > 0")
        object.__setattr__(self, "m", m)

    @property
    def d(self):
        return self.omega * self.m


def admittance_step(fs, tau_ref, params, dt):
    """Velocity command from a torque reference through 1/(M s + D).

    Written as a unit-gain low-pass at ``omega`` scaled by 1/(M omega), so
    the steady state is ``tau_ref / D``. ``fs.cutoff`` must equal ``omega``.
    """
    tau_ref = np.asarray(tau_ref, dtype=float)
    if tau_ref.shape != params.m.shape:
        raise ValueError(f"tau_ref shape {tau_ref.shape} != mass shape {params.m.shape}")
    if fs.cutoff != params.omega:
        raise ValueError("admittance filter cutoff must equal omega")
    return lowpass_step(fs, tau_ref / (params.m * params.omega), dt)


@dataclass(frozen=True, eq=False)
class DobState:
    lowpass: FilterState

    @classmethod
    def zeros(cls, g_dob, dt, n):
        return cls(FilterState.zeros(g_dob, dt, n))

    @property
    def cutoff(self):
        return self.lowpass.cutoff


def dob_step(ds, dtheta_res, tau_applied, j, dt):
    """Disturbance estimate in velocity-measurement form.

    Nominal plant ``J dw/dt = tau_applied - d``; the estimate is
    ``LPF(tau_applied + g J w) - g J w``, which equals ``LPF(tau_applied - J dw/dt)``
    without differentiating the velocity. Returns ``(d_hat, state)``.
    """
    dtheta_res = np.asarray(dtheta_res, dtype=float)
    tau_applied = np.asarray(tau_applied, dtype=float)
    check_finite("dob_step", dtheta_res, tau_applied)
    jv = ds.cutoff * j.j * dtheta_res
    filtered, lp = lowpass_step(ds.lowpass, tau_applied + jv, dt)
    return filtered - jv, DobState(lp)
