"""Training: normalization, noise augmentation and Adam over truncated BPTT windows.

Each sequence is cut into consecutive ``seq_len`` windows. A minibatch
holds whole sequences; their windows are visited in order and the LSTM
state is carried from one window to the next (detached), so the network
sees the same stateful rollout it will run in closed loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError
from .lstm import LstmModel, forward, loss_and_gradients
from .normalize import NormalizerStats, apply, fit_normalizer

# networks run on min-max values shifted to be centred on zero
CENTER = 0.5


@dataclass
class TrainConfig:
    layers: int = 2
    hidden: int = 32
    seq_len: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    epochs: int = 100
    seed: int = 0
    augment_factor: int = 20
    noise_scale: float = 0.01
    val_fraction: float = 0.1
    grad_clip: float = 1.0

    def __post_init__(self):
        for name in ("layers", "hidden", "seq_len", "batch_size", "epochs", "augment_factor"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.learning_rate < 0 or self.noise_scale < 0 or self.grad_clip <= 0:
            raise ValueError("learning_rate and noise_scale must be >= 0, grad_clip > 0")
        if not 0 <= self.val_fraction < 1:
            raise ValueError("val_fraction must be in [0, 1)")


@dataclass
class Sequence:
    """Centred, normalized input/target pair of one episode."""

    x: np.ndarray
    y: np.ndarray
    episode: int = 0


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    best_val_loss: float


def stats_for(pairs):
    """Normalizer over the concatenated inputs and targets (18 dims for 9 + 9)."""
    if not pairs:
        raise ValueError("cannot fit a normalizer on an empty dataset")
    return fit_normalizer([np.hstack([p.inputs, p.targets]) for p in pairs])


def encode(stats, pairs):
    dim = pairs[0].inputs.shape[1] if pairs else 0
    s_in, s_out = stats.slice(0, dim), stats.slice(dim, len(stats))
    return [Sequence(apply(s_in, p.inputs) - CENTER, apply(s_out, p.targets) - CENTER, p.episode)
            for p in pairs]


def augment(sequences, factor, noise_scale, seed=0):
    """``factor`` copies of every sequence; copy 0 is clean, the rest get Gaussian input noise."""
    if factor < 1:
        raise ValueError("augmentation factor must be >= 1")
    rng = np.random.default_rng(seed)
    out = []
    for copy in range(factor):
        for seq in sequences:
            x = seq.x if copy == 0 else seq.x + rng.normal(0.0, noise_scale, size=seq.x.shape)
            out.append(Sequence(x, seq.y, seq.episode))
    return out


def split_episodes(sequences, val_fraction, rng):
    """Hold out whole episodes for validation."""
    episodes = sorted({s.episode for s in sequences})
    n_val = int(round(val_fraction * len(episodes)))
    if val_fraction > 0 and len(episodes) > 1:
        n_val = min(max(n_val, 1), len(episodes) - 1)
    else:
        n_val = 0
    held = set(rng.permutation(episodes)[:n_val].tolist())
    train = [s for s in sequences if s.episode not in held]
    val = [s for s in sequences if s.episode in held]
    return train, val


def evaluate(model, sequences):
    """Mean squared error of full stateful rollouts."""
    if not sequences:
        return float("nan")
    total, count = 0.0, 0
    for s in sequences:
        pred, _, _ = forward(model, s.x[None])
        err = pred[0] - s.y
        total += float(np.sum(err * err))
        count += err.size
    return total / count


class Adam:
    def __init__(self, size, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        params -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _batches_of_equal_length(seqs, batch_size, rng):
    order = rng.permutation(len(seqs))
    # group by length so windows line up without padding
    by_len = {}
    for i in order:
        by_len.setdefault(len(seqs[i].x), []).append(seqs[i])
    batches = []
    for length in sorted(by_len):
        group = by_len[length]
        batches += [group[i:i + batch_size] for i in range(0, len(group), batch_size)]
    return [batches[i] for i in rng.permutation(len(batches))]


def train_epoch(model, opt, seqs, cfg, rng):
    losses, weights = [], []
    for batch in _batches_of_equal_length(seqs, cfg.batch_size, rng):
        x = np.stack([s.x for s in batch])
        y = np.stack([s.y for s in batch])
        state = None
        for start in range(0, x.shape[1], cfg.seq_len):
            xw, yw = x[:, start:start + cfg.seq_len], y[:, start:start + cfg.seq_len]
            loss, grad, state = loss_and_gradients(model, xw, yw, state, return_state=True)
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise NumericalError(f"training diverged: loss {loss}")
            norm = np.linalg.norm(grad)
            if norm > cfg.grad_clip:
                grad *= cfg.grad_clip / norm
            opt.step(model.params, grad)
            losses.append(loss)
            weights.append(xw.shape[0] * xw.shape[1])
    return float(np.average(losses, weights=weights))


def train(pairs, cfg, callback=None):
    """Fit a model to dataset ``pairs``; returns ``(model, stats, history)``.

    Normalizer stats are fitted on the clean training episodes before any
    augmentation. The returned model is the one with the lowest validation
    loss (training loss when nothing is held out).
    """
    if not pairs:
        raise ValueError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    split_rng, init_rng, noise_seed, order_rng = rng.spawn(4)
    episodes = [Sequence(p.inputs, p.targets, p.episode) for p in pairs]
    train_raw, val_raw = split_episodes(episodes, cfg.val_fraction, split_rng)
    train_ids = {s.episode for s in train_raw}
    stats = stats_for([p for p in pairs if p.episode in train_ids])
    train_seqs = encode(stats, [p for p in pairs if p.episode in train_ids])
    val_seqs = encode(stats, [p for p in pairs if p.episode not in train_ids])
    seqs = augment(train_seqs, cfg.augment_factor, cfg.noise_scale,
                   noise_seed.integers(2**63))

    dim_in, dim_out = pairs[0].inputs.shape[1], pairs[0].targets.shape[1]
    model = LstmModel.init(dim_in, cfg.hidden, cfg.layers, dim_out, init_rng)
    opt = Adam(model.params.size, cfg.learning_rate)
    best = model.copy()
    best_val = np.inf
    history = []
    for epoch in range(cfg.epochs):
        train_loss = train_epoch(model, opt, seqs, cfg, order_rng)
        val_loss = evaluate(model, val_seqs) if val_seqs else train_loss
        if not np.isfinite(val_loss):
            raise NumericalError(f"validation loss became {val_loss} at epoch {epoch}")
        if val_loss < best_val:
            best_val = val_loss
            best = model.copy()
        history.append(EpochRecord(epoch, train_loss, val_loss, best_val))
        if callback is not None:
            callback(history[-1])
    return best, stats, history


def write_history(history, path, provenance=None):
    lines = []
    if provenance:
        lines += ["# config " + ln for ln in provenance.rstrip("\n").split("\n")]
    lines.append("epoch,train_loss,val_loss,best_val_loss")
    lines += [f"{r.epoch},{r.train_loss:.17g},{r.val_loss:.17g},{r.best_val_loss:.17g}" for r in history]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


__all__ = ["CENTER", "Adam", "EpochRecord", "NormalizerStats", "Sequence", "TrainConfig",
           "augment", "encode", "evaluate", "split_episodes", "stats_for", "train", "write_history"]
