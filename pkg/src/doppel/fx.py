"""Stochastic audio-effect chain used as waveform augmentation.

Effects are applied in a fixed order (high-pass, low-pass, pitch shift,
time shift, reverb), each independently with a configurable probability.
Decisions and effect parameters are drawn once per mini-batch of rows, so
parameters are shared within a mini-batch and vary across mini-batches;
everything is keyed by (seed, mini-batch index).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import butter, fftconvolve, get_window, lfilter, resample_poly

from . import rng
from .synth import AudioBatch

_EFFECTS = ("highpass", "lowpass", "pitch_shift", "time_shift", "reverb")

_IR_SEED = 0x1B5  # fixed key for the built-in impulse responses


@dataclass
class FxConfig:
    """Ranges and batching policy for the augmentation chain."""

    highpass_cutoff_range: tuple[float, float] = (20.0, 800.0)
    lowpass_cutoff_range: tuple[float, float] = (1200.0, 8000.0)
    pitch_shift_range: tuple[float, float] = (-2.0, 2.0)
    time_shift_range: tuple[float, float] = (-0.25, 0.25)
    impulse_response_paths: tuple[str, ...] = ()
    probability: float = 0.5
    mini_batch_size: int = 100

    def __post_init__(self):
        for name in ("highpass_cutoff_range", "lowpass_cutoff_range",
                     "pitch_shift_range", "time_shift_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must be ordered (lo < hi)")
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        if self.mini_batch_size < 1:
            raise ValueError("mini_batch_size must be >= 1")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "FxConfig":
        raw = json.loads(text)
        ir_dir = raw.pop("ir_dir", None)
        if ir_dir is not None:
            from pathlib import Path

            raw["impulse_response_paths"] = tuple(
                str(p) for p in sorted(Path(ir_dir).glob("*.wav")))
        for key in ("highpass_cutoff_range", "lowpass_cutoff_range",
                    "pitch_shift_range", "time_shift_range",
                    "impulse_response_paths"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(**raw)


# ---------------------------------------------------------------------------
# Individual effects
# ---------------------------------------------------------------------------

def _biquad(audio: AudioBatch, cutoff_hz: float, btype: str) -> AudioBatch:
    nyquist = audio.sample_rate_hz / 2.0
    if not 0.0 < cutoff_hz < nyquist:
        raise ValueError(f"cutoff must lie in (0, {nyquist}) Hz")
    b, a = butter(2, cutoff_hz / nyquist, btype=btype)
    out = lfilter(b, a, audio.samples, axis=1)
    return AudioBatch(out, audio.sample_rate_hz, audio.duration_s)


def high_pass(audio: AudioBatch, cutoff_hz: float) -> AudioBatch:
    """Second-order Butterworth high-pass, applied per row."""
    return _biquad(audio, cutoff_hz, "highpass")


def low_pass(audio: AudioBatch, cutoff_hz: float) -> AudioBatch:
    """Second-order Butterworth low-pass, applied per row."""
    return _biquad(audio, cutoff_hz, "lowpass")


def time_shift(audio: AudioBatch, fraction: float) -> AudioBatch:
    """Circular rotation by round(fraction * n) samples (rollover)."""
    if abs(fraction) > 1.0:
        raise ValueError("fraction must lie in [-1, 1]")
    shift = int(round(fraction * audio.n))
    return AudioBatch(np.roll(audio.samples, shift, axis=1),
                      audio.sample_rate_hz, audio.duration_s)


def _stft(x: np.ndarray, n_fft: int, hop: int) -> np.ndarray:
    k, n = x.shape
    pad = np.pad(x, ((0, 0), (n_fft // 2, n_fft // 2)))
    frames = np.lib.stride_tricks.sliding_window_view(pad, n_fft, axis=1)[:, ::hop]
    window = get_window("hann", n_fft, fftbins=True)
    return np.fft.rfft(frames * window, axis=2)


def _istft(spec: np.ndarray, n_fft: int, hop: int) -> np.ndarray:
    k, t, _ = spec.shape
    window = get_window("hann", n_fft, fftbins=True)
    frames = np.fft.irfft(spec, n=n_fft, axis=2) * window
    n = n_fft + hop * (t - 1)
    out = np.zeros((k, n))
    norm = np.zeros(n)
    for j in range(t):
        out[:, j * hop:j * hop + n_fft] += frames[:, j]
        norm[j * hop:j * hop + n_fft] += window ** 2
    out /= np.maximum(norm, 1e-8)
    return out[:, n_fft // 2:-(n_fft // 2)]


def _phase_vocoder(spec: np.ndarray, rate: float, hop: int,
                   n_fft: int) -> np.ndarray:
    """Resample STFT frames in time by ``rate`` with phase accumulation."""
    k, t, bins = spec.shape
    steps = np.arange(0, t - 1, rate)
    expected = hop * 2.0 * math.pi * np.arange(bins) / n_fft
    mag = np.abs(spec)
    phase = np.angle(spec)
    out = np.empty((k, steps.size, bins), dtype=complex)
    acc = phase[:, 0].copy()
    for j, s in enumerate(steps):
        i0 = int(s)
        frac = s - i0
        m = (1.0 - frac) * mag[:, i0] + frac * mag[:, i0 + 1]
        out[:, j] = m * np.exp(1j * acc)
        dphi = phase[:, i0 + 1] - phase[:, i0] - expected
        dphi -= 2.0 * math.pi * np.round(dphi / (2.0 * math.pi))
        acc += expected + dphi
    return out


def pitch_shift(audio: AudioBatch, semitones: float, n_fft: int = 1024,
                hop: int = 256) -> AudioBatch:
    """Pitch shift by a semitone offset, preserving length.

    Phase-vocoder time stretch followed by polyphase resampling; pure tones
    land within 2% of the target frequency.
    """
    if abs(semitones) > 12.0:
        raise ValueError("semitones must lie in [-12, 12]")
    if semitones == 0.0:
        return AudioBatch(audio.samples.copy(), audio.sample_rate_hz,
                          audio.duration_s)
    rate = 2.0 ** (-semitones / 12.0)  # <1 stretches longer (pitch goes up)
    spec = _stft(audio.samples, n_fft, hop)
    stretched = _istft(_phase_vocoder(spec, rate, hop, n_fft), n_fft, hop)
    ratio = Fraction(rate).limit_denominator(1000)
    out = resample_poly(stretched, ratio.numerator, ratio.denominator, axis=1)
    n = audio.n
    if out.shape[1] < n:
        out = np.pad(out, ((0, 0), (0, n - out.shape[1])))
    return AudioBatch(out[:, :n], audio.sample_rate_hz, audio.duration_s)


def reverb(audio: AudioBatch, impulse: np.ndarray) -> AudioBatch:
    """Convolution reverb, truncated to the input length and renormalized to
    the input's per-row peak."""
    impulse = np.asarray(impulse, dtype=np.float64).ravel()
    if impulse.size == 0:
        raise ValueError("empty impulse response")
    if impulse.size > audio.n:
        impulse = impulse[:audio.n]
    wet = fftconvolve(audio.samples, impulse[None, :], mode="full",
                      axes=1)[:, :audio.n]
    peak_in = np.abs(audio.samples).max(axis=1, keepdims=True)
    peak_out = np.abs(wet).max(axis=1, keepdims=True)
    scale = np.divide(peak_in, peak_out, out=np.ones_like(peak_in),
                      where=peak_out > 0)
    return AudioBatch(wet * scale, audio.sample_rate_hz, audio.duration_s)


def default_impulse_responses(rate_hz: int = 16000) -> list[np.ndarray]:
    """Three small synthetic exponential-decay impulse responses."""
    out = []
    for i, (length_s, tau_s) in enumerate(((0.12, 0.03), (0.25, 0.06),
                                           (0.40, 0.10))):
        n = int(length_s * rate_hz)
        t = np.arange(n) / rate_hz
        g = rng.stream(_IR_SEED, rng.FX, i)
        ir = g.standard_normal(n) * np.exp(-t / tau_s)
        ir[0] = 1.0  # direct path
        out.append(ir / np.abs(ir).max())
    return out


def _load_irs(config: FxConfig, rate_hz: int) -> list[np.ndarray]:
    if not config.impulse_response_paths:
        return default_impulse_responses(rate_hz)
    from .tensorio import read_wav

    irs = []
    for path in config.impulse_response_paths:
        batch = read_wav(path)
        irs.append(batch.samples[0])
    return irs


# ---------------------------------------------------------------------------
# The chain
# ---------------------------------------------------------------------------

def chain_plan(config: FxConfig, seed: int, n_minibatches: int,
               n_irs: int = 3, start: int = 0) -> list[dict]:
    """Per-mini-batch effect decisions and parameters.

    This is the exact plan :func:`apply_chain` executes; draws happen in a
    fixed order so the stream stays aligned whether or not an effect fires.
    """
    plans = []
    for j in range(start, start + n_minibatches):
        g = rng.stream(seed, rng.FX, j)
        plan = {}
        for effect, (lo, hi) in (
                ("highpass", config.highpass_cutoff_range),
                ("lowpass", config.lowpass_cutoff_range),
                ("pitch_shift", config.pitch_shift_range),
                ("time_shift", config.time_shift_range)):
            plan[f"apply_{effect}"] = g.uniform() < config.probability
            plan[effect] = g.uniform(lo, hi)
        plan["apply_reverb"] = g.uniform() < config.probability
        plan["reverb_ir"] = int(g.integers(n_irs)) if n_irs else 0
        plans.append(plan)
    return plans


def _apply_plan(audio: AudioBatch, plan: dict, irs: list[np.ndarray]) -> AudioBatch:
    nyquist = audio.sample_rate_hz / 2.0
    if plan["apply_highpass"]:
        audio = high_pass(audio, min(plan["highpass"], nyquist * 0.999))
    if plan["apply_lowpass"]:
        audio = low_pass(audio, min(plan["lowpass"], nyquist * 0.999))
    if plan["apply_pitch_shift"]:
        audio = pitch_shift(audio, plan["pitch_shift"])
    if plan["apply_time_shift"]:
        audio = time_shift(audio, plan["time_shift"])
    if plan["apply_reverb"] and irs:
        audio = reverb(audio, irs[plan["reverb_ir"]])
    return audio


def apply_chain(audio: AudioBatch, config: FxConfig, seed: int) -> AudioBatch:
    """Run the effect chain over ``audio`` in mini-batches of config size.

    Deterministic per (seed, mini-batch index); rows within a mini-batch share
    one set of effect decisions and parameters.
    """
    irs = _load_irs(config, audio.sample_rate_hz)
    size = config.mini_batch_size
    n_mb = (audio.k + size - 1) // size
    plans = chain_plan(config, seed, n_mb, n_irs=len(irs))
    rows = []
    for j in range(n_mb):
        part = AudioBatch(audio.samples[j * size:(j + 1) * size],
                          audio.sample_rate_hz, audio.duration_s)
        rows.append(_apply_plan(part, plans[j], irs).samples)
    out = np.concatenate(rows, axis=0)
    peak = np.abs(out).max(axis=1, keepdims=True)
    over = peak > 1.0
    if np.any(over):  # final safety renormalization
        out = np.where(over, out / np.maximum(peak, 1e-12), out)
    return AudioBatch(out, audio.sample_rate_hz, audio.duration_s)
