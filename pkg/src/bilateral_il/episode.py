"""Episode logs and their CSV representation.

A log is columnar: one row per control tick holding the measured master and
slave responses, both velocity commands, the mop length in use and the desk
reaction on the slave's mop tip. Floats are written with 17 significant
digits so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import ast
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sim import JointState

FLOAT_FMT = "%.17g"


@dataclass(eq=False)
class EpisodeLog:
    dt: float
    t: np.ndarray
    master: np.ndarray  # (K, 3N): theta, dtheta, tau
    slave: np.ndarray  # (K, 3N)
    vel_cmd_m: np.ndarray  # (K, N)
    vel_cmd_s: np.ndarray  # (K, N)
    mop_length: np.ndarray  # (K,)
    force: np.ndarray  # (K, 2): fx, fy on the slave tip
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        k = self.t.shape[0]
        n3 = self.master.shape[1] if self.master.ndim == 2 else 0
        shapes = {
            "master": (k, n3),
            "slave": (k, n3),
            "vel_cmd_m": (k, n3 // 3),
            "vel_cmd_s": (k, n3 // 3),
            "mop_length": (k,),
            "force": (k, 2),
        }
        for name, shape in shapes.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        if n3 % 3:
            raise ValueError("response rows must hold theta, dtheta, tau for every joint")
        if k > 1 and not np.allclose(np.diff(self.t), self.dt, rtol=0, atol=1e-9):
            raise ValueError("time column is not a uniform grid with spacing dt")

    @classmethod
    def empty(cls, n_joints, dt, meta=None):
        z = np.zeros
        return cls(dt, z(0), z((0, 3 * n_joints)), z((0, 3 * n_joints)), z((0, n_joints)),
                   z((0, n_joints)), z(0), z((0, 2)), dict(meta or {}))

    def __len__(self):
        return self.t.shape[0]

    @property
    def n_joints(self):
        return self.master.shape[1] // 3

    def master_state(self, k):
        return JointState.from_vector(self.master[k])

    def slave_state(self, k):
        return JointState.from_vector(self.slave[k])

    def slice(self, start, stop):
        return EpisodeLog(self.dt, self.t[start:stop], self.master[start:stop],
                          self.slave[start:stop], self.vel_cmd_m[start:stop],
                          self.vel_cmd_s[start:stop], self.mop_length[start:stop],
                          self.force[start:stop], dict(self.meta))


class LogBuilder:
    """Row-wise accumulator producing an :class:`EpisodeLog`."""

    def __init__(self, n_joints, dt, meta=None):
        self.n = n_joints
        self.dt = dt
        self.meta = dict(meta or {})
        self.rows = []

    def append(self, t, master, slave, vel_cmd_m, vel_cmd_s, mop_length, force):
        self.rows.append(np.concatenate([
            [t], master.as_vector(), slave.as_vector(), vel_cmd_m, vel_cmd_s,
            [mop_length], force,
        ]))

    def build(self):
        if not self.rows:
            return EpisodeLog.empty(self.n, self.dt, self.meta)
        a = np.vstack(self.rows)
        n = self.n
        cols = np.cumsum([1, 3 * n, 3 * n, n, n, 1, 2])
        t, m, s, vm, vs, mop, f, _ = np.split(a, cols, axis=1)
        return EpisodeLog(self.dt, t[:, 0], m, s, vm, vs, mop[:, 0], f, self.meta)


def column_names(n):
    def resp(prefix):
        return ([f"theta_{prefix}{i}" for i in range(n)] + [f"dtheta_{prefix}{i}" for i in range(n)]
                + [f"tau_{prefix}{i}" for i in range(n)])

    return (["t"] + resp("m") + resp("s") + [f"vcmd_m{i}" for i in range(n)]
            + [f"vcmd_s{i}" for i in range(n)] + ["mop_length", "fx", "fy"])


def _header_lines(meta, provenance):
    lines = []
    for key in sorted(meta):
        value = meta[key]
        if isinstance(value, np.generic):
            value = value.item()
        lines.append(f"# meta {key}={value!r}")
    if provenance:
        lines.extend("# config " + line for line in provenance.rstrip("\n").split("\n"))
    return lines


def write_episode(log, path, provenance=None):
    """Write ``log`` as CSV; ``provenance`` (e.g. the config YAML) goes into comments."""
    n = log.n_joints
    data = np.column_stack([log.t, log.master, log.slave, log.vel_cmd_m, log.vel_cmd_s,
                            log.mop_length, log.force]) if len(log) else np.zeros((0, 1 + 8 * n + 3))
    meta = dict(log.meta, dt=log.dt, n_joints=n)
    buf = io.StringIO()
    for line in _header_lines(meta, provenance):
        buf.write(line + "\n")
    buf.write(",".join(column_names(n)) + "\n")
    if len(data):
        np.savetxt(buf, data, delimiter=",", fmt=FLOAT_FMT)
    Path(path).write_text(buf.getvalue())


def _parse_meta(lines):
    meta = {}
    for line in lines:
        if line.startswith("# meta "):
            key, _, value = line[len("# meta "):].partition("=")
            meta[key] = ast.literal_eval(value)
    return meta


def read_episode(path):
    text = Path(path).read_text()
    lines = text.split("\n")
    comments = [ln for ln in lines if ln.startswith("#")]
    meta = _parse_meta(comments)
    body = [ln for ln in lines if ln and not ln.startswith("#")]
    header = body[0].split(",")
    n = int(meta.pop("n_joints"))
    dt = float(meta.pop("dt"))
    if header != column_names(n):
        raise ValueError(f"{path}: unexpected columns {header}")
    if len(body) == 1:
        return EpisodeLog.empty(n, dt, meta)
    data = np.loadtxt(body[1:], delimiter=",", ndmin=2)
    cols = np.cumsum([1, 3 * n, 3 * n, n, n, 1, 2])
    t, m, s, vm, vs, mop, f, _ = np.split(data, cols, axis=1)
    return EpisodeLog(dt, t[:, 0], m, s, vm, vs, mop[:, 0], f, meta)
