"""Master-response prediction and the model file format.

Model file layout::

    BILATERAL-LSTM v1\\n
    {json header}\\n
    <raw little-endian float64 parameters>

The header records the layer sizes, the normalizer stats and the
parameter count; everything is written in a fixed order so identical
models give identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..sim import JointState
from .lstm import LstmModel, lstm_forward
from .normalize import NormalizerStats, apply, invert
from .train import CENTER

MAGIC = b"BILATERAL-LSTM v1\n"


class Predictor:
    """Stateful one-step predictor of the master response from the slave response."""

    def __init__(self, model, stats):
        if len(stats) != model.n_in + model.n_out:
            raise ValueError(f"stats cover {len(stats)} dims, model needs {model.n_in + model.n_out}")
        self.model = model
        self.stats_in = stats.slice(0, model.n_in)
        self.stats_out = stats.slice(model.n_in, len(stats))
        self.state = model.zero_state()

    def reset(self):
        self.state = self.model.zero_state()

    def predict_vector(self, slave_vec):
        x = apply(self.stats_in, slave_vec) - CENTER
        y, self.state = lstm_forward(self.model, x[None], self.state, return_state=True)
        return invert(self.stats_out, y[0] + CENTER)

    def __call__(self, slave):
        """Predicted master :class:`JointState`; may hold non-finite values."""
        v = self.predict_vector(slave.as_vector())
        n = v.size // 3
        return _unchecked_state(v[:n], v[n:2 * n], v[2 * n:])


def _unchecked_state(theta, dtheta, tau):
    # JointState rejects non-finite values; callers check predictions themselves
    if np.all(np.isfinite(theta)) and np.all(np.isfinite(dtheta)) and np.all(np.isfinite(tau)):
        return JointState(theta, dtheta, tau)
    return None


def predict_master(predictor, slave):
    """Predicted master response, or ``None`` if the network produced non-finite values."""
    return predictor(slave)


def save_model(path, model, stats, extra=None):
    header = {
        "layers": model.layers,
        "hidden": model.hidden,
        "n_in": model.n_in,
        "n_out": model.n_out,
        "n_params": int(model.params.size),
        "stats_lo": [float(v) for v in stats.lo],
        "stats_hi": [float(v) for v in stats.hi],
    }
    if extra:
        header["extra"] = extra
    blob = json.dumps(header, sort_keys=True).encode() + b"\n"
    Path(path).write_bytes(MAGIC + blob + model.params.astype("<f8").tobytes())


def load_model(path):
    """Returns ``(model, stats, header)``."""
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ValueError(f"{path}: not a model file (bad magic)")
    rest = data[len(MAGIC):]
    end = rest.index(b"\n")
    header = json.loads(rest[:end])
    params = np.frombuffer(rest[end + 1:], dtype="<f8").astype(float)
    if params.size != header["n_params"]:
        raise ValueError(f"{path}: expected {header['n_params']} parameters, found {params.size}")
    model = LstmModel(header["n_in"], header["hidden"], header["layers"], header["n_out"], params)
    stats = NormalizerStats(np.array(header["stats_lo"]), np.array(header["stats_hi"]))
    return model, stats, header
