"""Min-max normalization fitted on the training set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class NormalizerStats:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-D with equal length")
        if np.any(hi < lo):
            raise ValueError("max < min in some dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def degenerate(self):
        return self.hi == self.lo

    @property
    def span(self):
        # degenerate dims get a unit span so apply/invert stay finite
        return np.where(self.degenerate, 1.0, self.hi - self.lo)

    def __len__(self):
        return self.lo.size

    def slice(self, start, stop):
        return NormalizerStats(self.lo[start:stop], self.hi[start:stop])


def fit_normalizer(data):
    """Per-column min/max of a 2-D array (or list of arrays stacked row-wise)."""
    if isinstance(data, (list, tuple)):
        if not data:
            raise ValueError("cannot fit a normalizer on an empty dataset")
        data = np.vstack(data)
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("cannot fit a normalizer on an empty dataset")
    return NormalizerStats(data.min(axis=0), data.max(axis=0))


def apply(stats, x):
    """Map the training range of each dim onto [0, 1]; degenerate dims give 0.5."""
    x = np.asarray(x, dtype=float)
    return np.where(stats.degenerate, 0.5, (x - stats.lo) / stats.span)


def invert(stats, xn):
    xn = np.asarray(xn, dtype=float)
    return np.where(stats.degenerate, stats.lo, stats.lo + xn * stats.span)
