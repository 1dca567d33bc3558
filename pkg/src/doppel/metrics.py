"""Dataset characterization: pair-similarity curves, PCA paths, Fréchet
distance between embedding Gaussians, causal-uncertainty proxies from
classifier probabilities, spectral features, and real-clip segment mixing.

Embeddings and probability matrices from external models are ingested from
files (see :mod:`doppel.tensorio`); nothing here runs a neural network.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import rng
from .synth import AudioBatch
from .errors import NumericalError


@dataclass
class GaussianStats:
    """Mean and covariance fit to an embedding matrix."""

    mu: np.ndarray
    sigma: np.ndarray
    n: int

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64).ravel()
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        d = self.mu.size
        if self.sigma.shape != (d, d):
            raise ValueError("sigma must be square and match mu")
        if not np.allclose(self.sigma, self.sigma.T, atol=1e-8):
            raise ValueError("sigma must be symmetric")


def fit_gaussian(embeddings: np.ndarray) -> GaussianStats:
    """Fit mean and (unbiased) covariance to embedding rows."""
    e = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    n, d = e.shape
    if n < 2:
        raise ValueError("need at least 2 samples to fit a covariance")
    if not np.isfinite(e).all():
        raise NumericalError("embeddings contain NaN/Inf")
    if n <= d:
        warnings.warn(f"only {n} samples for {d} dimensions; covariance "
                      "will be rank-deficient", stacklevel=2)
    mu = e.mean(axis=0)
    sigma = np.cov(e, rowvar=False, ddof=1)
    sigma = 0.5 * (sigma + sigma.T)
    return GaussianStats(mu, np.atleast_2d(sigma), n)


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition; eigenvalues below
    a small negative tolerance are an error, tiny negatives clamp to 0."""
    vals, vecs = np.linalg.eigh(matrix)
    if vals.min() < -1e-8 * max(1.0, abs(vals.max())):
        raise NumericalError(
            f"matrix is not PSD (min eigenvalue {vals.min():.3e})")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Fréchet distance between two Gaussians:
    ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)).

    The cross term uses Tr((S_a^(1/2) S_b S_a^(1/2))^(1/2)), computed with
    symmetric eigendecompositions only.
    """
    if a.mu.size != b.mu.size:
        raise ValueError("dimension mismatch between stats")
    root_a = _psd_sqrt(a.sigma)
    inner = root_a @ b.sigma @ root_a
    inner = 0.5 * (inner + inner.T)
    cross = np.trace(_psd_sqrt(inner))
    mean_term = float(np.sum((a.mu - b.mu) ** 2))
    return mean_term + float(np.trace(a.sigma) + np.trace(b.sigma)
                             - 2.0 * cross)


# ---------------------------------------------------------------------------
# Embedding-space views of positive pairs
# ---------------------------------------------------------------------------

def mean_pair_cosine(e1: np.ndarray, e2: np.ndarray) -> float:
    """Mean cosine similarity over matched rows."""
    e1 = np.atleast_2d(np.asarray(e1, dtype=np.float64))
    e2 = np.atleast_2d(np.asarray(e2, dtype=np.float64))
    if e1.shape != e2.shape:
        raise ValueError("pair shapes differ")
    n1 = np.linalg.norm(e1, axis=1)
    n2 = np.linalg.norm(e2, axis=1)
    if np.any(n1 == 0) or np.any(n2 == 0):
        raise ValueError("zero-vector embedding has no cosine")
    return float(np.mean(np.sum(e1 * e2, axis=1) / (n1 * n2)))


def cosine_similarity_curve(embedding_pairs) -> list[tuple[float, float]]:
    """[(delta, mean pair cosine)] for a list of (delta, E1, E2) triples."""
    return [(float(d), mean_pair_cosine(e1, e2))
            for d, e1, e2 in embedding_pairs]


def pca_2d(embeddings: np.ndarray):
    """Top-2 principal-component projection of mean-centered rows.

    Returns (projection (k, 2), explained variance pair). Rank-deficient
    input yields a zero second component.
    """
    e = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    k = e.shape[0]
    if k <= 2:
        raise ValueError("PCA projection needs more than 2 rows")
    centered = e - e.mean(axis=0)
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    comp = vt[:2]
    var = (s[:2] ** 2) / (k - 1)
    if s.size < 2 or s[1] <= s[0] * 1e-12:
        proj = np.zeros((k, 2))
        proj[:, 0] = centered @ comp[0]
        return proj, (float(var[0]), 0.0)
    return centered @ comp.T, (float(var[0]), float(var[1]))


# ---------------------------------------------------------------------------
# Causal-uncertainty proxies from classifier probabilities
# ---------------------------------------------------------------------------

@dataclass
class ProbabilityMatrix:
    """Row-stochastic classifier outputs, k x C."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if np.any(self.values < 0):
            raise ValueError("probabilities must be non-negative")
        sums = self.values.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-5):
            raise ValueError("rows must sum to 1 (within 1e-5)")


def causal_uncertainty(p: ProbabilityMatrix | np.ndarray):
    """Per-row (h_cu, h_p, s_conf):

    h_cu    maximum predicted probability
    h_p     entropy normalized by log C, in [0, 1]
    s_conf  gap between the two most probable classes
    """
    if not isinstance(p, ProbabilityMatrix):
        p = ProbabilityMatrix(p)
    v = p.values
    c = v.shape[1]
    h_cu = v.max(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(v > 0, v * np.log(v), 0.0)
    h_p = -plogp.sum(axis=1) / np.log(c)
    top2 = np.sort(v, axis=1)[:, -2:]
    s_conf = top2[:, 1] - top2[:, 0]
    return h_cu, h_p, s_conf


# ---------------------------------------------------------------------------
# Spectral features
# ---------------------------------------------------------------------------

def spectral_flux(spec_frames: np.ndarray) -> float:
    """Mean rectified L2 flux over consecutive L2-normalized spectral frames.

    ``spec_frames`` is (frames, bins) magnitude spectra for one clip.
    """
    s = np.atleast_2d(np.asarray(spec_frames, dtype=np.float64))
    if s.shape[0] < 2:
        raise ValueError("flux needs at least two frames")
    norms = np.linalg.norm(s, axis=1, keepdims=True)
    s = np.divide(s, norms, out=np.zeros_like(s), where=norms > 0)
    diff = np.maximum(s[1:] - s[:-1], 0.0)
    return float(np.mean(np.linalg.norm(diff, axis=1)))


def spectral_flatness(spectrum: np.ndarray) -> np.ndarray:
    """Geometric over arithmetic mean of magnitudes, per frame, in [0, 1]."""
    s = np.atleast_2d(np.asarray(spectrum, dtype=np.float64))
    eps = 1e-12
    gm = np.exp(np.mean(np.log(s + eps), axis=1))
    am = np.mean(s, axis=1) + eps
    return gm / am


# ---------------------------------------------------------------------------
# Segment mixing (dense mixtures of real clips)
# ---------------------------------------------------------------------------

def mix_segments(clips, n_segments: int, seed: int,
                 segment_s: float = 1.0) -> AudioBatch:
    """Layer ``n_segments`` one-second excerpts into a single clip.

    Sources are chosen per segment (uniformly among ``clips``), excerpt start
    positions are uniform over each source, gains are equal at 1/n, and the
    mix is peak-normalized. Every source must be at least one segment long.
    """
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    clips = list(clips)
    if not clips:
        raise ValueError("no source clips")
    rate = clips[0].sample_rate_hz
    seg_n = int(round(segment_s * rate))
    rows = []
    for clip in clips:
        if clip.sample_rate_hz != rate:
            raise ValueError("all clips must share a sample rate")
        if clip.n < seg_n:
            raise ValueError("source clip shorter than one segment")
        rows.extend(clip.samples)
    g = rng.stream(seed, rng.METRICS, 0)
    mix = np.zeros(seg_n)
    for _ in range(n_segments):
        row = rows[int(g.integers(len(rows)))]
        start = int(g.integers(row.size - seg_n + 1))
        mix += row[start:start + seg_n] / n_segments
    peak = np.abs(mix).max()
    if peak > 0:
        mix = mix / peak
    return AudioBatch(mix[None, :], rate, segment_s)
