"""Waveform-to-log-mel frontend.

The representation is the classic CNN-audio frontend: 16 kHz mono input,
25 ms periodic-Hann windows with a 10 ms hop, a 64-band HTK mel filterbank
spanning 125-7500 Hz applied to magnitude spectra, and log(mel + 0.01).
Output is cropped/padded to exactly 96 frames so a 1-second clip always
maps to a (96, 64) patch.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.signal import get_window, resample_poly

from .synth import AudioBatch

TARGET_RATE = 16000
MEL_FRAMES = 96
MEL_BANDS = 64
LOG_OFFSET = 0.01

_WINDOW_S = 0.025
_HOP_S = 0.010
_FMIN = 125.0
_FMAX = 7500.0
_NFFT = 512


def resample(audio: AudioBatch, target_hz: int) -> AudioBatch:
    """Polyphase resampling; output length is n * target / source, rounded."""
    if target_hz <= 0 or audio.sample_rate_hz <= 0:
        raise ValueError("sample rates must be positive")
    if target_hz == audio.sample_rate_hz:
        return audio
    ratio = Fraction(target_hz, audio.sample_rate_hz)
    out = resample_poly(audio.samples, ratio.numerator, ratio.denominator,
                        axis=1)
    return AudioBatch(out, target_hz, out.shape[1] / target_hz)


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_fft: int = _NFFT, rate_hz: int = TARGET_RATE,
                   n_bands: int = MEL_BANDS, fmin: float = _FMIN,
                   fmax: float = _FMAX) -> np.ndarray:
    """Triangular HTK-mel filterbank, (n_fft // 2 + 1, n_bands)."""
    freqs = np.fft.rfftfreq(n_fft, 1.0 / rate_hz)
    edges = _mel_to_hz(np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax),
                                   n_bands + 2))
    fb = np.zeros((freqs.size, n_bands))
    for b in range(n_bands):
        lo, center, hi = edges[b], edges[b + 1], edges[b + 2]
        up = (freqs - lo) / (center - lo)
        down = (hi - freqs) / (hi - center)
        fb[:, b] = np.maximum(0.0, np.minimum(up, down))
    return fb


def mel_center_frequencies() -> np.ndarray:
    """Center frequency (Hz) of each mel band."""
    edges = _mel_to_hz(np.linspace(_hz_to_mel(_FMIN), _hz_to_mel(_FMAX),
                                   MEL_BANDS + 2))
    return edges[1:-1]


def _frame(samples: np.ndarray, win: int, hop: int) -> np.ndarray:
    k, n = samples.shape
    if n < win:
        pad = np.zeros((k, win))
        pad[:, :n] = samples
        return pad[:, None, :]
    view = np.lib.stride_tricks.sliding_window_view(samples, win, axis=1)
    return view[:, ::hop, :]


def magnitude_spectrogram(samples: np.ndarray, rate_hz: int = TARGET_RATE,
                          window_s: float = _WINDOW_S, hop_s: float = _HOP_S,
                          n_fft: int = _NFFT) -> np.ndarray:
    """Batch STFT magnitudes, (k, frames, n_fft // 2 + 1)."""
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    win = int(round(window_s * rate_hz))
    hop = int(round(hop_s * rate_hz))
    frames = _frame(samples, win, hop)
    window = get_window("hann", win, fftbins=True)
    return np.abs(np.fft.rfft(frames * window, n=n_fft, axis=2))


def _fit_frames(mel: np.ndarray, n_frames: int, fill: float) -> np.ndarray:
    """Center-crop extra frames; pad missing ones at the floor value."""
    have = mel.shape[1]
    if have == n_frames:
        return mel
    if have > n_frames:
        lo = (have - n_frames) // 2
        return mel[:, lo:lo + n_frames, :]
    out = np.full((mel.shape[0], n_frames, mel.shape[2]), fill)
    lo = (n_frames - have) // 2
    out[:, lo:lo + have, :] = mel
    return out


def log_mel(audio: AudioBatch) -> np.ndarray:
    """Log-mel patches, (k, 96, 64). Input must be mono 16 kHz.

    Silence maps to a constant log(0.01) floor; scaling a waveform up never
    decreases any cell.
    """
    if audio.sample_rate_hz != TARGET_RATE:
        raise ValueError(f"expected {TARGET_RATE} Hz input; resample first")
    if audio.n == 0:
        raise ValueError("empty audio")
    mag = magnitude_spectrogram(audio.samples, TARGET_RATE)
    mel = mag @ mel_filterbank()
    out = np.log(mel + LOG_OFFSET)
    return _fit_frames(out, MEL_FRAMES, np.log(LOG_OFFSET))


def mel_embeddings(audio: AudioBatch) -> np.ndarray:
    """Flattened log-mel rows shifted to a zero floor, (k, 96 * 64 + 1).

    This is the toolkit's internal stand-in for learned embeddings when
    measuring pair similarity. The shift keeps silent regions from
    dominating cosine similarity, and a trailing constant coordinate keeps
    fully silent clips well-defined (two silent clips are maximally similar
    instead of producing zero vectors).
    """
    feats = log_mel(audio) - np.log(LOG_OFFSET)
    flat = feats.reshape(feats.shape[0], -1)
    return np.concatenate([flat, np.ones((flat.shape[0], 1))], axis=1)
