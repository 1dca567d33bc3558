"""Sampling parameter vectors and delta-perturbed positive pairs.

A pair starts from a shared parameter vector theta ~ U(0,1)^m_s. Two
independent standard-normal matrices are scaled by the perturbation factor
delta, added to theta, and clipped back into [0, 1]; rendering both sides
with the same seed yields two sounds that differ only through the parameter
perturbation. delta = 0 therefore reproduces the exact same sound twice,
and larger delta values produce progressively harder positives.

All draws are counter-based: row i of the stream is keyed by the global row
index ``row_offset + i`` so any batch can be regenerated in isolation,
without disk storage, no matter how many batches preceded it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import rng
from .architectures import ArchitectureSpec
from .synth import (DEFAULT_DURATION, DEFAULT_SAMPLE_RATE, AudioBatch,
                    ParamMatrix, render)


@dataclass
class PairBatch:
    """A batch of positive pairs: shared theta plus both perturbed versions."""

    theta: ParamMatrix
    theta1: ParamMatrix
    theta2: ParamMatrix
    delta: float
    seed: int
    row_offset: int = 0


def sample_params(k: int, arch: ArchitectureSpec, seed: int,
                  row_offset: int = 0) -> ParamMatrix:
    """i.i.d. Uniform(0, 1) parameter matrix, deterministic per
    (seed, row_offset + row, column)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    values = np.empty((k, arch.m_s))
    for i in range(k):
        g = rng.stream(seed, rng.PARAMS, row_offset + i)
        values[i] = g.uniform(0.0, 1.0, arch.m_s)
    return ParamMatrix(values, arch)


def perturb_pair(theta: ParamMatrix, delta: float, seed: int,
                 row_offset: int = 0) -> tuple[ParamMatrix, ParamMatrix]:
    """Two clipped perturbations of ``theta``: clip(theta + delta * Z_i, 0, 1)
    with Z_1, Z_2 independent standard-normal draws from distinct streams."""
    if delta < 0:
        raise ValueError("delta must be >= 0")
    k, m = theta.values.shape
    out = []
    for purpose in (rng.PERTURB_A, rng.PERTURB_B):
        z = np.empty((k, m))
        for i in range(k):
            z[i] = rng.stream(seed, purpose, row_offset + i).standard_normal(m)
        perturbed = np.clip(theta.values + delta * z, 0.0, 1.0)
        out.append(ParamMatrix(perturbed, theta.arch))
    return out[0], out[1]


def generate_pair_batch(arch: ArchitectureSpec, k: int, delta: float,
                        seed: int,
                        sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
                        duration_s: float = DEFAULT_DURATION,
                        row_offset: int = 0,
                        threads: int = 1) -> tuple[AudioBatch, AudioBatch, PairBatch]:
    """Sample theta, perturb it into a pair, and render both sides.

    Both sides render with the same seed, so delta = 0 gives bitwise-identical
    audio. Deterministic per (arch, k, delta, seed, row_offset).
    """
    theta = sample_params(k, arch, seed, row_offset)
    theta1, theta2 = perturb_pair(theta, delta, seed, row_offset)
    audio1 = render(arch, theta1, sample_rate_hz, duration_s, seed=seed,
                    row_offset=row_offset, threads=threads)
    audio2 = render(arch, theta2, sample_rate_hz, duration_s, seed=seed,
                    row_offset=row_offset, threads=threads)
    return audio1, audio2, PairBatch(theta, theta1, theta2, float(delta),
                                     seed, row_offset)


def iter_pair_batches(arch: ArchitectureSpec, batch_size: int, delta: float,
                      seed: int,
                      sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
                      duration_s: float = DEFAULT_DURATION,
                      start_batch: int = 0,
                      threads: int = 1) -> Iterator[tuple[AudioBatch, AudioBatch, PairBatch]]:
    """Endless stream of pair batches generated on the fly.

    Batch b covers global rows [b * batch_size, (b+1) * batch_size); nothing
    is stored, and batch b is identical whether or not earlier batches were
    consumed.
    """
    b = start_batch
    while True:
        yield generate_pair_batch(arch, batch_size, delta, seed,
                                  sample_rate_hz, duration_s,
                                  row_offset=b * batch_size, threads=threads)
        b += 1
