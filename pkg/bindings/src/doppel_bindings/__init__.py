"""Minimal scripting bindings over the doppel engine.

External ML frameworks consume live positive-pair streams through two
functions: :func:`open_pair_stream` returns an iterable handle yielding
(audio_a, audio_b) or (mel_a, mel_b) array batches, and :func:`mel_of`
maps waveform arrays to log-mel tensors. Outputs are bitwise identical to
the core engine (and the CLI) for the same configuration and seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

import doppel
from doppel import build_architecture, iter_pair_batches, log_mel
from doppel.fx import FxConfig, apply_chain
from doppel.synth import AudioBatch

__version__ = doppel.__version__

__all__ = ["PairStreamHandle", "StreamConfig", "mel_of", "open_pair_stream"]


@dataclass(frozen=True)
class StreamConfig:
    """Configuration for a pair stream; mirrors the core engine's knobs."""

    arch: str = "Voice"
    delta: float = 0.25
    batch_size: int = 64
    seed: int = 0
    sample_rate_hz: int = 16000
    duration_s: float = 1.0
    fx: FxConfig | None = None
    emit: str = "audio"  # "audio" or "mel"

    def __post_init__(self):
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.emit not in ("audio", "mel"):
            raise ValueError("emit must be 'audio' or 'mel'")


@dataclass
class PairStreamHandle:
    """Single-consumer iterator over positive-pair batches.

    Batch ``b`` is a pure function of (config, seed, b): handles with
    different seeds interleave freely, and iteration can resume from any
    batch index via ``start_batch``.
    """

    config: StreamConfig
    start_batch: int = 0
    _spec: object = field(init=False, repr=False)

    def __post_init__(self):
        self._spec = build_architecture(self.config.arch)

    @property
    def batch_shape(self) -> tuple[int, int]:
        n = int(round(self.config.sample_rate_hz * self.config.duration_s))
        return (self.config.batch_size, n)

    def batches(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        cfg = self.config
        stream = iter_pair_batches(self._spec, cfg.batch_size, cfg.delta,
                                   cfg.seed, cfg.sample_rate_hz,
                                   cfg.duration_s,
                                   start_batch=self.start_batch)
        for index, (a1, a2, _) in enumerate(stream, start=self.start_batch):
            if cfg.fx is not None:
                a1 = apply_chain(a1, cfg.fx, _fx_seed(cfg.seed, index, 0))
                a2 = apply_chain(a2, cfg.fx, _fx_seed(cfg.seed, index, 1))
            if cfg.emit == "mel":
                yield log_mel(a1), log_mel(a2)
            else:
                yield a1.samples, a2.samples

    def __iter__(self):
        return self.batches()


def _fx_seed(seed: int, batch_index: int, side: int) -> int:
    # distinct effect stream per (batch, side), stable across sessions
    return (seed * 2 + side) ^ (batch_index << 20)


def open_pair_stream(config: StreamConfig | dict,
                     start_batch: int = 0) -> PairStreamHandle:
    """Open a deterministic pair stream.

    ``config`` may be a :class:`StreamConfig` or a plain dict with the same
    keys. Invalid architectures or negative delta raise the core engine's
    error unchanged.
    """
    if isinstance(config, dict):
        config = dict(config)
        if isinstance(config.get("fx"), dict):
            config["fx"] = FxConfig(**config["fx"])
        config = StreamConfig(**config)
    return PairStreamHandle(config, start_batch=start_batch)


def mel_of(audio: np.ndarray, sample_rate_hz: int = 16000) -> np.ndarray:
    """Log-mel tensor, (k, 96, 64), for a (k, n) or (n,) waveform array.

    Matches the core frontend (and the CLI's exported mel tensors) bitwise
    for identical input.
    """
    audio = np.atleast_2d(np.asarray(audio, dtype=np.float64))
    batch = AudioBatch(audio, sample_rate_hz,
                       audio.shape[1] / sample_rate_hz)
    return log_mel(batch)
