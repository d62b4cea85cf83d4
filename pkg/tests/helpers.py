"""Shared test utilities."""

import numpy as np

from bilateral_il.learn.lstm import LstmModel, loss_and_gradients


def fd_gradient_worst(rng, draws=100, hidden=2, steps=3, h=1e-3):
    """Worst relative gap between BPTT and 5-point finite-difference gradients."""
    worst = 0.0
    for _ in range(draws):
        model = LstmModel.init(2, hidden, 1, 2, rng)
        x = rng.normal(size=(1, steps, 2))
        y = rng.normal(size=(1, steps, 2))
        _, g = loss_and_gradients(model, x, y)
        p = model.params.copy()
        fd = np.zeros_like(p)
        for k in range(p.size):
            vals = []
            for d in (2, 1, -1, -2):
                model.params[:] = p
                model.params[k] += d * h
                vals.append(loss_and_gradients(model, x, y)[0])
            fd[k] = (-vals[0] + 8 * vals[1] - 8 * vals[2] + vals[3]) / (12 * h)
        model.params[:] = p
        rel = np.abs(g - fd) / np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-12)
        worst = max(worst, float(rel.max(initial=0.0)))
    return worst
