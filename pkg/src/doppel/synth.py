"""Batch-parallel rendering of normalized parameter matrices into audio.

Everything here is vectorized over the batch dimension: parameter vectors go
in as rows of a k x m_s matrix in [0, 1], waveforms come out as rows of a
k x n float array. Rendering is a pure function of (architecture, parameters,
sample rate, duration, seed); row i depends only on parameter row i and
(seed, row_offset + i), so batches can be split across workers or rendered
one row at a time with identical results.

Envelopes and LFOs are evaluated at sample_rate / 16 and linearly upsampled;
oscillator phase is accumulated at audio rate. Naive (non-band-limited)
waveshapes are used throughout, with pitch clamped at Nyquist.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .architectures import ArchitectureSpec

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_DURATION = 1.0

CTRL_DIVISOR = 16  # control signals run at sample_rate / 16

_RENDER_CHUNK = 128  # rows per worker task; bounds peak memory


class NyquistWarning(UserWarning):
    """Instantaneous pitch exceeded Nyquist and was clamped."""


@dataclass
class ControlSignal:
    """Batch of control-rate signals: envelopes in [0, 1], LFOs in [-1, 1]."""

    values: np.ndarray  # (k, n_ctrl)
    rate_hz: int

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")


@dataclass
class AudioBatch:
    """k mono waveforms with shared rate and duration."""

    samples: np.ndarray  # (k, n)
    sample_rate_hz: int
    duration_s: float

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        n_expect = int(round(self.sample_rate_hz * self.duration_s))
        if self.samples.shape[1] != n_expect:
            raise ValueError(
                f"sample count {self.samples.shape[1]} != "
                f"round(rate * duration) = {n_expect}")
        if not np.isfinite(self.samples).all():
            raise ValueError("audio contains NaN/Inf")

    @property
    def k(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]


@dataclass
class ParamMatrix:
    """Batch of normalized parameter vectors for one architecture."""

    values: np.ndarray  # (k, m_s), entries in [0, 1]
    arch: ArchitectureSpec

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if self.values.shape[1] != self.arch.m_s:
            raise ValueError(
                f"expected {self.arch.m_s} columns for {self.arch.name}, "
                f"got {self.values.shape[1]}")
        if not np.isfinite(self.values).all():
            raise ValueError("parameter matrix contains NaN/Inf")
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise ValueError("parameter matrix entries must lie in [0, 1]")

    @property
    def k(self) -> int:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# Control-signal generators
# ---------------------------------------------------------------------------

def _adsr_curve(attack, decay, sustain, release, alpha, note_on, t):
    """Vectorized ADSR: per-row parameters (k,) against a time grid (n,).

    Segment shape is x**alpha on each normalized ramp. Note-off enters the
    release from the envelope's current value, so gates shorter than
    attack+decay release early instead of jumping.
    """
    attack, decay, sustain, release, alpha, note_on = (
        np.atleast_1d(np.asarray(v, dtype=np.float64))[:, None]
        for v in (attack, decay, sustain, release, alpha, note_on))
    t = np.asarray(t, dtype=np.float64)[None, :]

    def ramp(num, den):
        # normalized segment position; zero-length segments complete instantly
        with np.errstate(over="ignore"):
            x = np.divide(num, den, out=np.ones(np.broadcast(num, den).shape),
                          where=den > 0)
        return np.clip(x, 0.0, 1.0)

    seg_a = ramp(t, attack) ** alpha
    seg_d = 1.0 + (sustain - 1.0) * ramp(t - attack, decay) ** alpha
    pre = np.where(t < attack, seg_a, seg_d)

    # envelope value the instant the gate closes
    at_off = np.where(
        note_on < attack,
        ramp(note_on, attack) ** alpha,
        1.0 + (sustain - 1.0) * ramp(note_on - attack, decay) ** alpha)
    rel = at_off * (1.0 - ramp(t - note_on, release) ** alpha)
    env = np.where(t < note_on, pre, rel)
    return np.clip(env, 0.0, 1.0)


def adsr_envelope(attack_s, decay_s, sustain_level, release_s, curve_alpha,
                  note_on_s, n_samples, rate_hz) -> ControlSignal:
    """Attack-decay-sustain-release envelope sampled at ``rate_hz``.

    Rises 0 -> 1 over the attack, falls 1 -> sustain over the decay, holds
    sustain until the gate closes at ``note_on_s``, then falls to 0 over the
    release. Each segment follows x**curve_alpha on its normalized ramp.
    """
    for label, v in (("attack_s", attack_s), ("decay_s", decay_s),
                     ("release_s", release_s), ("note_on_s", note_on_s)):
        if v < 0:
            raise ValueError(f"{label} must be >= 0")
    if not 0.0 <= sustain_level <= 1.0:
        raise ValueError("sustain_level must lie in [0, 1]")
    if curve_alpha <= 0:
        raise ValueError("curve_alpha must be > 0")
    if note_on_s > n_samples / rate_hz:
        raise ValueError("note_on_s exceeds the signal length")
    t = np.arange(n_samples) / rate_hz
    values = _adsr_curve(attack_s, decay_s, sustain_level, release_s,
                         curve_alpha, note_on_s, t)
    return ControlSignal(values, rate_hz)


_LFO_SHAPES = ("sine", "tri", "saw", "rsaw", "square")


def _lfo_wave(phase, weights):
    """Convex mixture of the five LFO waveshapes at the given phase (k, n).

    ``weights`` is (k, 5); all-zero rows fall back to a pure sine.
    """
    s = np.sin(phase)
    tri = (2.0 / math.pi) * np.arcsin(s)
    saw = 2.0 * np.mod(phase / (2.0 * math.pi), 1.0) - 1.0
    shapes = np.stack([s, tri, saw, -saw, np.sign(s)])  # (5, k, n)
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum(axis=1, keepdims=True)
    safe = np.where(total > 0, total, 1.0)
    w = np.where(total > 0, w / safe, [1.0, 0.0, 0.0, 0.0, 0.0])
    return np.einsum("ks,skn->kn", w, shapes)


def lfo(freq_hz, mod_depth, initial_phase, shape_weights, n_samples,
        rate_hz) -> ControlSignal:
    """Low-frequency oscillator: depth-scaled mixture of sine, triangle,
    saw, reverse-saw and square, bounded in [-1, 1]."""
    freq = np.atleast_1d(np.asarray(freq_hz, dtype=np.float64))
    weights = np.atleast_2d(np.asarray(shape_weights, dtype=np.float64))
    if weights.shape[-1] != 5:
        raise ValueError("shape_weights must have 5 entries")
    if np.any(weights < 0):
        raise ValueError("shape_weights must be >= 0")
    depth = np.atleast_1d(np.asarray(mod_depth, dtype=np.float64))
    phase0 = np.atleast_1d(np.asarray(initial_phase, dtype=np.float64))
    t = np.arange(n_samples) / rate_hz
    phase = phase0[:, None] + 2.0 * math.pi * freq[:, None] * t[None, :]
    values = depth[:, None] * _lfo_wave(phase, weights)
    return ControlSignal(values, rate_hz)


# ---------------------------------------------------------------------------
# Oscillators
# ---------------------------------------------------------------------------

def midi_to_hz(midi):
    return 440.0 * np.exp2((np.asarray(midi, dtype=np.float64) - 69.0) / 12.0)


def _upsample(values: np.ndarray, factor: int, n: int) -> np.ndarray:
    """Linear interpolation of control-rate rows up to n audio samples."""
    k, n_ctrl = values.shape
    if (n_ctrl - 1) * factor >= n:
        # segment-wise lerp: v0 + (v1 - v0) * r/factor, flattened in one go
        frac = np.arange(factor) / factor
        v0 = values[:, :-1, None]
        dv = np.diff(values, axis=1)[:, :, None]
        out = v0 + dv * frac
        return out.reshape(k, (n_ctrl - 1) * factor)[:, :n]
    pos = np.arange(n) / factor
    i0 = pos.astype(np.intp)
    frac = pos - i0
    hi = np.minimum(i0 + 1, n_ctrl - 1)
    return values[:, i0] * (1.0 - frac) + values[:, hi] * frac


def _as_audio_rate(sig: ControlSignal | np.ndarray, rate_hz: int,
                   n: int) -> np.ndarray:
    """Bring a control signal to (k, n) at audio rate, lerping if needed."""
    if isinstance(sig, ControlSignal):
        values, sig_rate = sig.values, sig.rate_hz
    else:
        values, sig_rate = np.atleast_2d(np.asarray(sig, dtype=np.float64)), rate_hz
    if sig_rate == rate_hz and values.shape[1] == n:
        return values
    if rate_hz % sig_rate:
        raise ValueError("control rate must divide the audio rate")
    return _upsample(values, rate_hz // sig_rate, n)


def _pitch_to_freq(midi, rate_hz):
    """MIDI -> Hz with a Nyquist clamp; warns when any sample clamps."""
    freq = midi_to_hz(midi)
    nyquist = rate_hz / 2.0
    if np.any(freq > nyquist):
        warnings.warn("oscillator pitch clamped at Nyquist", NyquistWarning,
                      stacklevel=3)
        freq = np.minimum(freq, nyquist)
    return freq


def _accumulate_phase(freq, initial_phase, rate_hz):
    phase0 = np.atleast_1d(np.asarray(initial_phase, dtype=np.float64))
    return phase0[:, None] + 2.0 * math.pi * np.cumsum(freq, axis=1) / rate_hz


def _inst_midi(midi_f0_signal, mod_signal, tuning, mod_depth, n, rate_hz):
    midi = _as_audio_rate(midi_f0_signal, rate_hz, n)
    tuning = np.atleast_1d(np.asarray(tuning, dtype=np.float64))[:, None]
    depth = np.atleast_1d(np.asarray(mod_depth, dtype=np.float64))[:, None]
    out = midi + tuning
    if mod_signal is not None:
        out = out + depth * _as_audio_rate(mod_signal, rate_hz, n)
    return out


def sine_vco(midi_f0_signal, mod_signal, tuning_semitones, mod_depth_semitones,
             initial_phase, n_samples, rate_hz, phase_mod=None) -> np.ndarray:
    """Phase-accumulating sine oscillator.

    Instantaneous pitch in MIDI space is f0 + tuning + mod_depth * mod_signal,
    converted via 440 * 2**((midi - 69) / 12) and clamped at Nyquist.
    ``phase_mod`` (radians, audio rate) implements FM when present.
    """
    midi = _inst_midi(midi_f0_signal, mod_signal, tuning_semitones,
                      mod_depth_semitones, n_samples, rate_hz)
    phase = _accumulate_phase(_pitch_to_freq(midi, rate_hz), initial_phase,
                              rate_hz)
    if phase_mod is not None:
        phase = phase + phase_mod
    return np.sin(phase)


def _square_saw_wave(phase, shape):
    frac = np.mod(phase / (2.0 * math.pi), 1.0)
    square = np.where(frac < 0.5, 1.0, -1.0)
    saw = 2.0 * frac - 1.0
    return (1.0 - shape) * square + shape * saw


def square_saw_vco(midi_f0_signal, mod_signal, tuning_semitones,
                   mod_depth_semitones, initial_phase, shape, n_samples,
                   rate_hz, phase_mod=None) -> np.ndarray:
    """Square/saw oscillator; shape=0 is a square, shape=1 a saw, with a
    continuous blend in between. ``shape`` may be scalar, (k,) or (k, n)."""
    midi = _inst_midi(midi_f0_signal, mod_signal, tuning_semitones,
                      mod_depth_semitones, n_samples, rate_hz)
    phase = _accumulate_phase(_pitch_to_freq(midi, rate_hz), initial_phase,
                              rate_hz)
    if phase_mod is not None:
        phase = phase + phase_mod
    shape = np.asarray(shape, dtype=np.float64)
    if shape.ndim == 1:
        shape = shape[:, None]
    return _square_saw_wave(phase, shape)


def noise_gen(seed: int, n_samples: int, k: int, row_offset: int = 0) -> np.ndarray:
    """Uniform white noise in [-1, 1]; row i is a pure function of
    (seed, row_offset + i), independent of batch composition."""
    out = np.empty((k, n_samples))
    for i in range(k):
        g = rng.stream(seed, rng.RENDER_NOISE, row_offset + i)
        out[i] = g.uniform(-1.0, 1.0, n_samples)
    return out


def modulation_mix(sources, gains, dest_ranges=None) -> list[ControlSignal]:
    """Weighted routing of control sources to destinations.

    ``gains`` is (n_src, n_dst) with entries in [0, 1]; destination d is
    sum_s gains[s, d] * source_s, clamped to its valid range (default [0, 1]).
    """
    gains = np.asarray(gains, dtype=np.float64)
    if gains.ndim != 2 or gains.shape[0] != len(sources):
        raise ValueError("gains must be (n_sources, n_destinations)")
    if gains.min() < 0.0 or gains.max() > 1.0:
        raise ValueError("gains must lie in [0, 1]")
    rate = sources[0].rate_hz
    stack = np.stack([s.values for s in sources])  # (s, k, n)
    if dest_ranges is None:
        dest_ranges = [(0.0, 1.0)] * gains.shape[1]
    mixed = np.einsum("sd,skn->dkn", gains, stack)
    return [ControlSignal(np.clip(mixed[d], lo, hi), rate)
            for d, (lo, hi) in enumerate(dest_ranges)]


# ---------------------------------------------------------------------------
# Full-graph rendering
# ---------------------------------------------------------------------------

@dataclass
class _RenderCtx:
    """Denormalized parameters plus the sample/control grids for one chunk."""

    arch: ArchitectureSpec
    nat: np.ndarray  # (k, m_s) natural-unit parameters
    sr: int
    n: int
    seed: int
    row_offset: int
    note_on: np.ndarray = field(init=False)
    ctrl_rate: int = field(init=False)
    t_ctrl: np.ndarray = field(init=False)

    def __post_init__(self):
        self.ctrl_rate = self.sr // CTRL_DIVISOR
        n_ctrl = (self.n - 1) // CTRL_DIVISOR + 2
        self.t_ctrl = np.arange(n_ctrl) / self.ctrl_rate
        # gate cannot outlive the rendered clip
        self.note_on = np.minimum(self.p("keyboard.duration"), self.n / self.sr)

    def p(self, name: str) -> np.ndarray:
        return self.nat[:, self.arch.param_index(name)]

    def adsr(self, module: str) -> np.ndarray:
        return _adsr_curve(self.p(f"{module}.attack"), self.p(f"{module}.decay"),
                           self.p(f"{module}.sustain"),
                           self.p(f"{module}.release"),
                           self.p(f"{module}.curve_alpha"),
                           self.note_on, self.t_ctrl)

    def lfo(self, module: str) -> np.ndarray:
        """LFO output with its amp/rate envelopes applied, (k, n_ctrl)."""
        amp_env = self.adsr(f"{module}_amp_adsr")
        rate_env = self.adsr(f"{module}_rate_adsr")
        freq = self.p(f"{module}.freq_hz")[:, None] * np.exp2(rate_env)
        phase = (self.p(f"{module}.initial_phase")[:, None]
                 + 2.0 * math.pi * np.cumsum(freq, axis=1) / self.ctrl_rate)
        weights = np.stack([self.p(f"{module}.w_{s}") for s in _LFO_SHAPES],
                           axis=1)
        wave = _lfo_wave(phase, weights)
        return self.p(f"{module}.mod_depth")[:, None] * amp_env * wave

    def matrix(self, sources: dict[str, np.ndarray], dests: list[str],
               bipolar: set[str]) -> dict[str, np.ndarray]:
        """Per-row modulation matrix; pitch-like dests clamp to [-1, 1]."""
        names = list(sources)
        stack = np.stack([sources[s] for s in names])  # (s, k, n_ctrl)
        k = stack.shape[1]
        gains = np.empty((k, len(names), len(dests)))
        for si, s in enumerate(names):
            for di, d in enumerate(dests):
                gains[:, si, di] = self.p(f"mod_matrix.gain_{s}__{d}")
        mixed = np.einsum("ksd,skn->dkn", gains, stack)
        out = {}
        for di, d in enumerate(dests):
            lo, hi = (-1.0, 1.0) if d in bipolar else (0.0, 1.0)
            out[d] = np.clip(mixed[di], lo, hi)
        return out

    def up(self, ctrl: np.ndarray) -> np.ndarray:
        return _upsample(ctrl, CTRL_DIVISOR, self.n)

    def vco_phase(self, module: str, pitch_mod: np.ndarray | None,
                  extra_env: np.ndarray | None = None) -> np.ndarray:
        """Audio-rate phase for a VCO given a control-rate pitch mod signal.

        Pitch is converted to Hz at control rate and the frequency track is
        upsampled, so the audio-rate path stays transcendental-free.
        """
        midi = self.p("keyboard.midi_f0")[:, None] + self.p(f"{module}.tuning")[:, None]
        phase0 = self.p(f"{module}.initial_phase")
        if pitch_mod is None:
            freq = _pitch_to_freq(midi, self.sr)  # (k, 1) constant pitch
            t = np.arange(1, self.n + 1) / self.sr
            return phase0[:, None] + 2.0 * math.pi * freq * t[None, :]
        mod = pitch_mod
        if extra_env is not None:
            mod = np.clip(mod + extra_env, -1.0, 1.0)
        midi = midi + self.p(f"{module}.mod_depth")[:, None] * mod
        freq = self.up(_pitch_to_freq(midi, self.sr))
        return _accumulate_phase(freq, phase0, self.sr)

    def noise(self) -> np.ndarray:
        return noise_gen(self.seed, self.n, self.nat.shape[0], self.row_offset)


def _render_voice(ctx: _RenderCtx) -> np.ndarray:
    sources = {"adsr_1": ctx.adsr("adsr_1"), "adsr_2": ctx.adsr("adsr_2"),
               "lfo_1": ctx.lfo("lfo_1"), "lfo_2": ctx.lfo("lfo_2")}
    dests = ["vco_1_pitch", "vco_1_amp", "vco_2_pitch", "vco_2_amp",
             "noise_amp"]
    m = ctx.matrix(sources, dests, bipolar={"vco_1_pitch", "vco_2_pitch"})

    vco_1 = np.sin(ctx.vco_phase("vco_1", m["vco_1_pitch"]))
    shape = ctx.p("vco_2.shape")[:, None]
    vco_2 = _square_saw_wave(ctx.vco_phase("vco_2", m["vco_2_pitch"]), shape)

    mix = (ctx.p("mixer.level_vco_1")[:, None] * vco_1 * ctx.up(m["vco_1_amp"])
           + ctx.p("mixer.level_vco_2")[:, None] * vco_2 * ctx.up(m["vco_2_amp"])
           + ctx.p("mixer.level_noise")[:, None] * ctx.noise()
           * ctx.up(m["noise_amp"]))
    return mix


def _render_voice_fm(ctx: _RenderCtx) -> np.ndarray:
    sources = {"adsr_1": ctx.adsr("adsr_1"), "adsr_2": ctx.adsr("adsr_2"),
               "lfo_1": ctx.lfo("lfo_1"), "lfo_2": ctx.lfo("lfo_2"),
               "fm_lfo": ctx.lfo("fm_lfo")}
    dests = ["vco_1_pitch", "vco_1_amp", "vco_2_pitch", "vco_2_amp",
             "noise_amp", "fm_pitch", "fm_index"]
    m = ctx.matrix(sources, dests,
                   bipolar={"vco_1_pitch", "vco_2_pitch", "fm_pitch"})

    # FM operator: sine modulator added to the carrier's phase
    fm_phase = ctx.vco_phase("fm_op", m["fm_pitch"],
                             extra_env=ctx.adsr("fm_pitch_adsr"))
    index_sig = np.clip(m["fm_index"] + ctx.adsr("fm_index_adsr"), 0.0, 1.0)
    index = (ctx.p("fm_op.index_max")[:, None] * ctx.up(index_sig)
             * ctx.up(ctx.adsr("fm_amp_adsr")))
    fm_out = index * np.sin(fm_phase)

    vco_1 = np.sin(ctx.vco_phase("vco_1", m["vco_1_pitch"]) + fm_out)
    shape = ctx.p("vco_2.shape")[:, None]
    vco_2 = _square_saw_wave(ctx.vco_phase("vco_2", m["vco_2_pitch"]), shape)

    mix = (ctx.p("mixer.level_vco_1")[:, None] * vco_1 * ctx.up(m["vco_1_amp"])
           + ctx.p("mixer.level_vco_2")[:, None] * vco_2 * ctx.up(m["vco_2_amp"])
           + ctx.p("mixer.level_noise")[:, None] * ctx.noise()
           * ctx.up(m["noise_amp"]))
    return mix


def _render_parametric(ctx: _RenderCtx) -> np.ndarray:
    sources = {f"adsr_{i}": ctx.adsr(f"adsr_{i}") for i in range(1, 6)}
    sources.update({f"lfo_{i}": ctx.lfo(f"lfo_{i}") for i in range(1, 6)})
    dests = ["sine_1_pitch", "sine_2_pitch", "sqsaw_1_pitch", "sqsaw_2_pitch",
             "sine_1_amp", "sine_2_amp", "sqsaw_1_amp", "sqsaw_2_amp",
             "noise_amp", "sqsaw_1_shape", "sqsaw_2_shape",
             "fm_sine_pitch", "fm_sine_index",
             "fm_sqsaw_pitch", "fm_sqsaw_index", "fm_sqsaw_shape"]
    bipolar = {d for d in dests if d.endswith("_pitch")}
    m = ctx.matrix(sources, dests, bipolar=bipolar)

    def fm_operator(op: str, shape_dest: str | None = None):
        phase = ctx.vco_phase(op, m[f"{op}_pitch"])
        index_sig = np.clip(m[f"{op}_index"] + ctx.adsr(f"{op}_index_adsr"),
                            0.0, 1.0)
        index = ctx.p(f"{op}.index_max")[:, None] * ctx.up(index_sig)
        if shape_dest is None:
            return index * np.sin(phase)
        shape = np.clip(ctx.p(f"{op}.shape")[:, None] + ctx.up(m[shape_dest]),
                        0.0, 1.0)
        return index * _square_saw_wave(phase, shape)

    fm_sine_out = fm_operator("fm_sine")
    fm_sqsaw_out = fm_operator("fm_sqsaw", "fm_sqsaw_shape")

    def chain_amp(chain: str) -> np.ndarray:
        env = np.clip(ctx.adsr(f"{chain}_amp_adsr") + m[f"{chain}_amp"],
                      0.0, 1.0)
        return ctx.up(env)

    sine_1 = np.sin(ctx.vco_phase("sine_1", m["sine_1_pitch"]) + fm_sine_out)
    sine_2 = np.sin(ctx.vco_phase("sine_2", m["sine_2_pitch"]))
    sh1 = np.clip(ctx.p("sqsaw_1.shape")[:, None] + ctx.up(m["sqsaw_1_shape"]),
                  0.0, 1.0)
    sqsaw_1 = _square_saw_wave(
        ctx.vco_phase("sqsaw_1", m["sqsaw_1_pitch"]) + fm_sqsaw_out, sh1)
    sh2 = np.clip(ctx.p("sqsaw_2.shape")[:, None] + ctx.up(m["sqsaw_2_shape"]),
                  0.0, 1.0)
    sqsaw_2 = _square_saw_wave(ctx.vco_phase("sqsaw_2", m["sqsaw_2_pitch"]), sh2)

    mix = (ctx.p("mixer.level_sine_1")[:, None] * sine_1 * chain_amp("sine_1")
           + ctx.p("mixer.level_sine_2")[:, None] * sine_2 * chain_amp("sine_2")
           + ctx.p("mixer.level_sqsaw_1")[:, None] * sqsaw_1 * chain_amp("sqsaw_1")
           + ctx.p("mixer.level_sqsaw_2")[:, None] * sqsaw_2 * chain_amp("sqsaw_2")
           + ctx.p("mixer.level_noise")[:, None] * ctx.noise()
           * chain_amp("noise"))
    return mix


_RENDERERS = {
    "Voice": _render_voice,
    "VoiceFM": _render_voice_fm,
    "ParametricSynth": _render_parametric,
}


def _render_chunk(arch, values, sr, n, seed, row_offset):
    nat = arch.denormalize(values)
    ctx = _RenderCtx(arch=arch, nat=nat, sr=sr, n=n, seed=seed,
                     row_offset=row_offset)
    mix = _RENDERERS[arch.name](ctx)
    return np.tanh(mix)  # soft limiter: mixed chains can exceed unity


def render(arch: ArchitectureSpec, params, sample_rate_hz: int = DEFAULT_SAMPLE_RATE,
           duration_s: float = DEFAULT_DURATION, seed: int = 0,
           row_offset: int = 0, threads: int = 1) -> AudioBatch:
    """Render a batch of parameter vectors to audio.

    Deterministic in (arch, params, sample_rate_hz, duration_s, seed): row i
    depends only on its own parameters and (seed, row_offset + i), so results
    are identical regardless of batch splitting or ``threads``.
    """
    if isinstance(params, ParamMatrix):
        if params.arch.name != arch.name:
            raise ValueError("parameter matrix was built for a different "
                             "architecture")
        values = params.values
    else:
        values = ParamMatrix(params, arch).values
    if sample_rate_hz % CTRL_DIVISOR:
        raise ValueError(f"sample rate must be divisible by {CTRL_DIVISOR}")
    n = int(round(sample_rate_hz * duration_s))
    k = values.shape[0]
    out = np.empty((k, n))
    spans = [(lo, min(lo + _RENDER_CHUNK, k))
             for lo in range(0, k, _RENDER_CHUNK)]

    def work(span):
        lo, hi = span
        out[lo:hi] = _render_chunk(arch, values[lo:hi], sample_rate_hz, n,
                                   seed, row_offset + lo)

    if threads > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, spans))
    else:
        for span in spans:
            work(span)
    return AudioBatch(out, sample_rate_hz, duration_s)
