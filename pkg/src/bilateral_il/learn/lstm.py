"""Stacked LSTM with a linear head, forward pass and backpropagation through time.

All parameters live in one flat float64 vector; the per-layer matrices are
views into it, which keeps the optimizer and the file format trivial.
Gate order inside the 4H blocks is input, forget, candidate, output.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


class LstmModel:
    """``layers`` LSTM layers of ``hidden`` units followed by a linear layer."""

    def __init__(self, n_in, hidden, layers, n_out, params=None):
        if min(n_in, hidden, layers, n_out) < 1:
            raise ValueError("all model sizes must be >= 1")
        self.n_in, self.hidden, self.layers, self.n_out = int(n_in), int(hidden), int(layers), int(n_out)
        self.shapes = []
        for layer in range(self.layers):
            width = self.n_in if layer == 0 else self.hidden
            self.shapes += [(width, 4 * self.hidden), (self.hidden, 4 * self.hidden), (4 * self.hidden,)]
        self.shapes += [(self.hidden, self.n_out), (self.n_out,)]
        size = sum(int(np.prod(s)) for s in self.shapes)
        if params is None:
            params = np.zeros(size)
        params = np.asarray(params, dtype=float)
        if params.shape != (size,):
            raise ValueError(f"expected {size} parameters, got shape {params.shape}")
        self.params = params.copy()
        self.views = self.unflatten(self.params)

    @classmethod
    def init(cls, n_in, hidden, layers, n_out, rng):
        """Uniform weights in +-1/sqrt(fan_in), seeded by ``rng``."""
        model = cls(n_in, hidden, layers, n_out)
        for view, shape in zip(model.views, model.shapes):
            # matrices map shape[0] inputs; biases follow the hidden width
            fan_in = shape[0] if len(shape) == 2 else hidden
            bound = 1.0 / np.sqrt(fan_in)
            view[...] = rng.uniform(-bound, bound, size=shape)
        return model

    def unflatten(self, flat):
        """Views of ``flat`` shaped like the parameter list."""
        out, pos = [], 0
        for shape in self.shapes:
            n = int(np.prod(shape))
            out.append(flat[pos:pos + n].reshape(shape))
            pos += n
        return out

    def layer(self, i):
        return self.views[3 * i: 3 * i + 3]

    @property
    def head(self):
        return self.views[-2:]

    def copy(self):
        return LstmModel(self.n_in, self.hidden, self.layers, self.n_out, self.params)

    def zero_state(self, batch=None):
        shape = (self.hidden,) if batch is None else (batch, self.hidden)
        return [(np.zeros(shape), np.zeros(shape)) for _ in range(self.layers)]


def _check_input(model, x):
    if x.ndim != 3 or x.shape[2] != model.n_in:
        raise ValueError(f"input must be (batch, time, {model.n_in}), got {x.shape}")


def _layer_forward(x, wx, wh, b, h, c):
    """Run one layer over (B, T, I); returns hidden sequence, final state, cache."""
    bsz, steps, _ = x.shape
    hid = wh.shape[0]
    # input contribution for all steps in one product
    zx = x @ wx + b
    hs = np.empty((bsz, steps, hid))
    cs = np.empty((bsz, steps, hid))
    gates = np.empty((bsz, steps, 4 * hid))
    h0, c0 = h, c
    for t in range(steps):
        z = zx[:, t] + h @ wh
        i = _sigmoid(z[:, :hid])
        f = _sigmoid(z[:, hid:2 * hid])
        g = np.tanh(z[:, 2 * hid:3 * hid])
        o = _sigmoid(z[:, 3 * hid:])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[:, t] = np.concatenate([i, f, g, o], axis=1)
        hs[:, t] = h
        cs[:, t] = c
    return hs, (h, c), (x, h0, c0, hs, cs, gates)


def forward(model, x, state=None):
    """Batched forward pass over ``x`` of shape (B, T, n_in).

    Returns ``(y, state', caches)``; ``state`` is a list of per-layer
    ``(h, c)`` arrays of shape (B, H), zero if omitted.
    """
    x = np.asarray(x, dtype=float)
    _check_input(model, x)
    if state is None:
        state = model.zero_state(x.shape[0])
    caches, new_state = [], []
    inp = x
    for layer in range(model.layers):
        wx, wh, b = model.layer(layer)
        h, c = state[layer]
        inp, st, cache = _layer_forward(inp, wx, wh, b, h, c)
        new_state.append(st)
        caches.append(cache)
    wy, by = model.head
    y = inp @ wy + by
    return y, new_state, caches


def lstm_forward(model, x_seq, state=None, return_state=False):
    """Outputs for one sequence (T, n_in) or a batch (B, T, n_in)."""
    x = np.asarray(x_seq, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
        if state is not None:
            state = [(h[None], c[None]) for h, c in state]
    y, st, _ = forward(model, x, state)
    if single:
        y = y[0]
        st = [(h[0], c[0]) for h, c in st]
    return (y, st) if return_state else y


def _layer_backward(dhs, cache, wx, wh, grads):
    x, h0, c0, hs, cs, gates = cache
    bsz, steps, hid = hs.shape
    dz_all = np.empty((bsz, steps, 4 * hid))
    dh_next = np.zeros((bsz, hid))
    dc_next = np.zeros((bsz, hid))
    for t in range(steps - 1, -1, -1):
        i, f, g, o = np.split(gates[:, t], 4, axis=1)
        c_prev = cs[:, t - 1] if t > 0 else c0
        tc = np.tanh(cs[:, t])
        dh = dhs[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = dz_all[:, t]
        dz[:, :hid] = dc * g * i * (1.0 - i)
        dz[:, hid:2 * hid] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * hid:3 * hid] = dc * i * (1.0 - g * g)
        dz[:, 3 * hid:] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dh_next = dz @ wh.T
    h_prev = np.concatenate([h0[:, None], hs[:, :-1]], axis=1)
    dwx, dwh, db = grads
    dwx += np.einsum("bti,btg->ig", x, dz_all)
    dwh += np.einsum("bth,btg->hg", h_prev, dz_all)
    db += dz_all.sum(axis=(0, 1))
    return dz_all @ wx.T


def loss_and_gradients(model, x, y, state=None, return_state=False):
    """Mean squared error over all steps and dims, with gradients by BPTT.

    ``x`` and ``y`` are (B, T, n_in) and (B, T, n_out). Gradients come back
    as a flat vector aligned with ``model.params``; the incoming ``state``
    is treated as a constant (truncated BPTT).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 2:
        x, y = x[None], y[None]
    if x.shape[0] == 0 or x.shape[1] == 0:
        raise ValueError("empty batch")
    if y.shape != x.shape[:2] + (model.n_out,):
        raise ValueError(f"target shape {y.shape} does not match input {x.shape}")
    pred, new_state, caches = forward(model, x, state)
    err = pred - y
    loss = float(np.mean(err * err))
    grad = np.zeros_like(model.params)
    gviews = model.unflatten(grad)
    dy = 2.0 * err / err.size
    wy, _ = model.head
    top = caches[-1][3]
    gviews[-2] += np.einsum("bth,bto->ho", top, dy)
    gviews[-1] += dy.sum(axis=(0, 1))
    dh = dy @ wy.T
    for layer in range(model.layers - 1, -1, -1):
        wx, wh, _ = model.layer(layer)
        dh = _layer_backward(dh, caches[layer], wx, wh, gviews[3 * layer: 3 * layer + 3])
    if return_state:
        return loss, grad, new_state
    return loss, grad
