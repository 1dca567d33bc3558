"""Alignment/uniformity objectives, LR schedule, and a desk-scale trainer.

The losses operate on embedding matrices whose rows live on the unit
hypersphere (encoders here L2-normalize their outputs):

    align(E1, E2)  = (1/k) sum_j ||E1[j] - E2[j]||^alpha
    unif(E)        = log[ (1/k^2) sum_j sum_l exp(-t ||E[j] - E[l]||^2) ]

The double sum includes self-pairs, so uniformity is always <= 0 and equals
0 exactly when all rows coincide. Gradients are analytic; the toy trainer
runs the full loop (sample -> perturb -> render -> mel -> embed -> losses ->
SGD with weight decay) on a small in-package encoder, deterministically per
seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import rng
from .architectures import ArchitectureSpec
from .errors import DivergenceError
from .frontend import LOG_OFFSET, log_mel
from .pairs import generate_pair_batch


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def _check_pair(e1, e2):
    e1 = np.atleast_2d(np.asarray(e1, dtype=np.float64))
    e2 = np.atleast_2d(np.asarray(e2, dtype=np.float64))
    if e1.shape != e2.shape:
        raise ValueError(f"embedding shapes differ: {e1.shape} vs {e2.shape}")
    return e1, e2


def alignment_loss(e1, e2, alpha: float = 2.0) -> float:
    """Mean alpha-powered distance between paired embedding rows."""
    e1, e2 = _check_pair(e1, e2)
    d = np.linalg.norm(e1 - e2, axis=1)
    return float(np.mean(d ** alpha))


def alignment_loss_grad(e1, e2, alpha: float = 2.0):
    """(loss, dL/dE1, dL/dE2)."""
    e1, e2 = _check_pair(e1, e2)
    k = e1.shape[0]
    diff = e1 - e2
    d = np.linalg.norm(diff, axis=1)
    loss = float(np.mean(d ** alpha))
    if alpha == 2.0:
        g = (2.0 / k) * diff
    else:
        scale = np.where(d > 0, d ** (alpha - 2.0), 0.0)
        g = (alpha / k) * scale[:, None] * diff
    return loss, g, -g


def _pairwise_sq_dists(e):
    sq = np.sum(e * e, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (e @ e.T)
    return np.maximum(d2, 0.0)


def uniformity_loss(e, t: float = 2.0) -> float:
    """Log of the mean Gaussian-potential over all ordered row pairs
    (self-pairs included); <= 0, and 0 only when all rows coincide."""
    e = np.atleast_2d(np.asarray(e, dtype=np.float64))
    if e.shape[0] < 2:
        raise ValueError("uniformity needs at least 2 rows")
    w = np.exp(-t * _pairwise_sq_dists(e))
    return float(np.log(np.mean(w)))


def uniformity_loss_grad(e, t: float = 2.0):
    """(loss, dL/dE)."""
    e = np.atleast_2d(np.asarray(e, dtype=np.float64))
    if e.shape[0] < 2:
        raise ValueError("uniformity needs at least 2 rows")
    k = e.shape[0]
    w = np.exp(-t * _pairwise_sq_dists(e))
    s = w.sum()
    loss = float(np.log(s / (k * k)))
    row = w.sum(axis=1)
    # d/de_i of log sum exp(-t d^2): each unordered pair appears twice
    g = (-4.0 * t / s) * (row[:, None] * e - w @ e)
    return loss, g


@dataclass
class TrainConfig:
    """Hyperparameters for the contrastive loop.

    ``base_lr`` follows the linear scaling rule
    lr = 0.12 * total_batch / 256 with total_batch = batch_size *
    data_parallel; defaults reproduce the reference schedule (0.72 peak,
    decade drops at 77.5% / 85% / 92.5% of training).
    """

    epochs: int = 200
    sounds_per_epoch: int = 100000
    train_val_split: float = 0.9
    batch_size: int = 768
    data_parallel: int = 2
    lr_scale: float = 0.12
    lr_ref_batch: int = 256
    weight_decay: float = 1e-6
    gamma: float = 0.1
    milestones: tuple[float, ...] = (0.775, 0.85, 0.925)
    lambda_align: float = 1.0
    lambda_unif: float = 1.0
    align_alpha: float = 2.0
    unif_t: float = 2.0

    def __post_init__(self):
        if not all(0.0 < m < 1.0 for m in self.milestones):
            raise ValueError("milestones must lie in (0, 1)")
        if not all(a < b for a, b in zip(self.milestones, self.milestones[1:])):
            raise ValueError("milestones must be strictly increasing")
        for name in ("epochs", "sounds_per_epoch", "batch_size",
                     "data_parallel", "lr_scale", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.train_val_split < 1.0:
            raise ValueError("train_val_split must lie in (0, 1)")

    @property
    def total_batch(self) -> int:
        return self.batch_size * self.data_parallel

    @property
    def base_lr(self) -> float:
        return self.lr_scale * self.total_batch / self.lr_ref_batch

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        raw = json.loads(text)
        if "milestones" in raw:
            raw["milestones"] = tuple(raw["milestones"])
        return cls(**raw)


def total_loss(e1, e2, config: TrainConfig) -> float:
    return (config.lambda_align
            * alignment_loss(e1, e2, config.align_alpha)
            + config.lambda_unif * 0.5
            * (uniformity_loss(e1, config.unif_t)
               + uniformity_loss(e2, config.unif_t)))


def total_loss_grad(e1, e2, config: TrainConfig):
    """(align, unif, total, dL/dE1, dL/dE2)."""
    a, ga1, ga2 = alignment_loss_grad(e1, e2, config.align_alpha)
    u1, gu1 = uniformity_loss_grad(e1, config.unif_t)
    u2, gu2 = uniformity_loss_grad(e2, config.unif_t)
    unif = 0.5 * (u1 + u2)
    total = config.lambda_align * a + config.lambda_unif * unif
    g1 = config.lambda_align * ga1 + 0.5 * config.lambda_unif * gu1
    g2 = config.lambda_align * ga2 + 0.5 * config.lambda_unif * gu2
    return a, unif, total, g1, g2


def lr_at(epoch: int, config: TrainConfig) -> float:
    """Piecewise-constant LR: base times gamma per passed milestone, with
    milestones at ceil(fraction * epochs)."""
    passed = sum(epoch >= math.ceil(m * config.epochs)
                 for m in config.milestones)
    return config.base_lr * config.gamma ** passed


# ---------------------------------------------------------------------------
# Small encoders with analytic gradients
# ---------------------------------------------------------------------------

def _normalize_rows(z):
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms = np.maximum(norms, 1e-12)
    return z / norms, norms


def _normalize_backward(e, norms, grad_e):
    # y = z / ||z||  =>  dz = (g - y (y . g)) / ||z||
    dot = np.sum(e * grad_e, axis=1, keepdims=True)
    return (grad_e - e * dot) / norms


class LinearEncoder:
    """Single linear map onto the unit hypersphere."""

    def __init__(self, in_dim: int, out_dim: int, seed: int = 0):
        g = rng.stream(seed, rng.TRAIN, 0)
        self.w = g.standard_normal((in_dim, out_dim)) / math.sqrt(in_dim)

    def forward(self, x):
        z = x @ self.w
        e, norms = _normalize_rows(z)
        return e, (x, e, norms)

    def backward(self, cache, grad_e):
        x, e, norms = cache
        gz = _normalize_backward(e, norms, grad_e)
        return {"w": x.T @ gz}

    def step(self, grads, lr: float, weight_decay: float):
        self.w -= lr * (grads["w"] + weight_decay * self.w)

    @property
    def parameters(self):
        return {"w": self.w}


class MlpEncoder:
    """Two-layer perceptron (tanh hidden) onto the unit hypersphere."""

    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int,
                 seed: int = 0):
        g = rng.stream(seed, rng.TRAIN, 0)
        self.w1 = g.standard_normal((in_dim, hidden_dim)) / math.sqrt(in_dim)
        self.b1 = np.zeros(hidden_dim)
        self.w2 = g.standard_normal((hidden_dim, out_dim)) / math.sqrt(hidden_dim)
        self.b2 = np.zeros(out_dim)

    def forward(self, x):
        h = np.tanh(x @ self.w1 + self.b1)
        z = h @ self.w2 + self.b2
        e, norms = _normalize_rows(z)
        return e, (x, h, e, norms)

    def backward(self, cache, grad_e):
        x, h, e, norms = cache
        gz = _normalize_backward(e, norms, grad_e)
        gh = (gz @ self.w2.T) * (1.0 - h * h)
        return {"w2": h.T @ gz, "b2": gz.sum(axis=0),
                "w1": x.T @ gh, "b1": gh.sum(axis=0)}

    def step(self, grads, lr: float, weight_decay: float):
        for name in ("w1", "b1", "w2", "b2"):
            p = getattr(self, name)
            p -= lr * (grads[name] + weight_decay * p)

    @property
    def parameters(self):
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


def build_encoder(spec: dict, in_dim: int, seed: int):
    kind = spec.get("kind", "mlp")
    out_dim = int(spec.get("embed_dim", 32))
    if kind == "linear":
        return LinearEncoder(in_dim, out_dim, seed)
    if kind == "mlp":
        return MlpEncoder(in_dim, int(spec.get("hidden", 64)), out_dim, seed)
    raise ValueError(f"unknown encoder kind {kind!r}")


# ---------------------------------------------------------------------------
# Toy trainer
# ---------------------------------------------------------------------------

TOY_CONFIG = dict(epochs=10, sounds_per_epoch=2000, batch_size=64,
                  data_parallel=1)

_MEL_SHIFT = -math.log(LOG_OFFSET)  # lift the silence floor to 0
_MEL_SCALE = 1.0 / _MEL_SHIFT


def _mel_input(audio):
    feats = (log_mel(audio) + _MEL_SHIFT) * _MEL_SCALE
    return feats.reshape(feats.shape[0], -1)


@dataclass
class TraceRow:
    epoch: int
    split: str
    align: float
    unif: float
    total: float
    lr: float

    def astuple(self):
        return (self.epoch, self.split, self.align, self.unif, self.total,
                self.lr)


def train_toy(arch: ArchitectureSpec, delta: float, config: TrainConfig,
              encoder_spec: dict | None = None, seed: int = 0,
              sample_rate_hz: int = 16000, duration_s: float = 1.0):
    """Run the full contrastive loop at desk scale.

    Per epoch: fresh pair batches are generated on the fly, embedded, scored
    with the alignment/uniformity objective, and the encoder is updated by
    SGD with weight decay under the multi-step LR schedule. A fixed
    validation set (from a disjoint stream) is scored after every epoch.
    Returns (encoder, list of TraceRow). Deterministic per seed.
    """
    # default to the linear encoder: the tanh MLP can saturate into a fully
    # collapsed (zero-loss-gradient) embedding at large delta at this scale
    encoder_spec = encoder_spec or {"kind": "linear", "embed_dim": 32}
    pairs_per_epoch = config.sounds_per_epoch // 2
    n_train = int(pairs_per_epoch * config.train_val_split) // config.batch_size
    n_val = max(1, (pairs_per_epoch - int(pairs_per_epoch
                                          * config.train_val_split))
                // config.batch_size)
    if n_train < 1:
        raise ValueError("config too small: no full training batch per epoch")

    base = rng.stream(seed, rng.TRAIN, 1)
    train_seed, val_seed = (int(s) for s in base.integers(2 ** 62, size=2))

    in_dim = 96 * 64
    encoder = build_encoder(encoder_spec, in_dim, seed)

    def embed_pair(pair_seed, batch_index):
        a1, a2, _ = generate_pair_batch(
            arch, config.batch_size, delta, pair_seed, sample_rate_hz,
            duration_s, row_offset=batch_index * config.batch_size)
        return _mel_input(a1), _mel_input(a2)

    val_batches = [embed_pair(val_seed, b) for b in range(n_val)]

    trace: list[TraceRow] = []
    for epoch in range(config.epochs):
        lr = lr_at(epoch, config)
        tr_align = tr_unif = tr_total = 0.0
        for b in range(n_train):
            x1, x2 = embed_pair(train_seed, epoch * n_train + b)
            e1, cache1 = encoder.forward(x1)
            e2, cache2 = encoder.forward(x2)
            a, u, total, g1, g2 = total_loss_grad(e1, e2, config)
            if not math.isfinite(total):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch} batch {b}: "
                    f"align={a} unif={u} lr={lr}")
            grads1 = encoder.backward(cache1, g1)
            grads2 = encoder.backward(cache2, g2)
            merged = {k: grads1[k] + grads2[k] for k in grads1}
            encoder.step(merged, lr, config.weight_decay)
            tr_align += a
            tr_unif += u
            tr_total += total
        trace.append(TraceRow(epoch, "train", tr_align / n_train,
                              tr_unif / n_train, tr_total / n_train, lr))

        va = vu = vt = 0.0
        for x1, x2 in val_batches:
            e1, _ = encoder.forward(x1)
            e2, _ = encoder.forward(x2)
            a = alignment_loss(e1, e2, config.align_alpha)
            u = 0.5 * (uniformity_loss(e1, config.unif_t)
                       + uniformity_loss(e2, config.unif_t))
            va += a
            vu += u
            vt += config.lambda_align * a + config.lambda_unif * u
        trace.append(TraceRow(epoch, "val", va / n_val, vu / n_val,
                              vt / n_val, lr))
    return encoder, trace
