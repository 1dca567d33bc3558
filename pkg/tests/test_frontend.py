import math

import numpy as np
import pytest

from doppel.frontend import (LOG_OFFSET, MEL_BANDS, MEL_FRAMES,
                             log_mel, magnitude_spectrogram,
                             mel_center_frequencies, mel_embeddings, resample)
from doppel.synth import AudioBatch

from conftest import fft_peak_hz, tone

RATE = 16000


def test_resample_identity():
    audio = tone(500.0)
    assert resample(audio, RATE) is audio


def test_resample_length_ratio():
    audio = tone(500.0)
    out = resample(audio, 8000)
    assert out.samples.shape[1] == 8000
    assert out.sample_rate_hz == 8000


def test_resample_preserves_tone():
    audio = tone(1000.0, rate_hz=32000)
    out = resample(audio, 16000)
    assert abs(fft_peak_hz(out.samples[0], 16000) - 1000.0) <= 2.0


def test_resample_rejects_bad_rate():
    with pytest.raises(ValueError):
        resample(tone(100.0), 0)


def test_log_mel_shape_contract():
    out = log_mel(tone(440.0))
    assert out.shape == (1, MEL_FRAMES, MEL_BANDS)


def test_log_mel_shape_for_odd_lengths():
    # short and long inputs still map to exactly 96 frames
    for dur in (0.5, 1.5):
        n = int(RATE * dur)
        audio = AudioBatch(np.zeros((2, n)), RATE, dur)
        assert log_mel(audio).shape == (2, MEL_FRAMES, MEL_BANDS)


def test_log_mel_silence_floor():
    out = log_mel(AudioBatch(np.zeros((1, RATE)), RATE, 1.0))
    assert np.allclose(out, math.log(LOG_OFFSET))
    assert out.min() >= math.log(LOG_OFFSET) - 1e-12


def test_log_mel_tone_band():
    # independent recompute of the HTK mel center-frequency table
    def hz_to_mel(f):
        return 2595.0 * math.log10(1.0 + f / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    lo, hi = hz_to_mel(125.0), hz_to_mel(7500.0)
    centers = [mel_to_hz(lo + (hi - lo) * (i + 1) / (MEL_BANDS + 1))
               for i in range(MEL_BANDS)]
    expect = int(np.argmin([abs(c - 440.0) for c in centers]))
    assert np.allclose(mel_center_frequencies(),
                       np.array(centers), rtol=1e-9)

    out = log_mel(tone(440.0))
    band = int(out[0].mean(axis=0).argmax())
    assert band == expect


def test_log_mel_energy_monotonicity():
    quiet = tone(300.0, amp=0.2)
    loud = AudioBatch(quiet.samples * 3.0, RATE, 1.0)
    assert np.all(log_mel(loud) >= log_mel(quiet) - 1e-12)


def test_log_mel_rejects_wrong_rate():
    with pytest.raises(ValueError, match="16000"):
        log_mel(tone(440.0, rate_hz=8000))


def test_log_mel_rejects_empty():
    with pytest.raises(ValueError):
        log_mel(AudioBatch(np.zeros((1, 0)), RATE, 1e-9))


def test_magnitude_spectrogram_frame_count():
    spec = magnitude_spectrogram(np.zeros((1, RATE)))
    assert spec.shape == (1, 98, 257)  # 96 after the center crop


def test_mel_embeddings_zero_floor():
    emb = mel_embeddings(AudioBatch(np.zeros((1, RATE)), RATE, 1.0))
    # flattened shifted mel plus one constant energy-presence coordinate
    assert emb.shape == (1, MEL_FRAMES * MEL_BANDS + 1)
    assert np.allclose(emb[:, :-1], 0.0)
    assert np.all(emb[:, -1] == 1.0)


def test_mel_embeddings_silent_pairs_have_unit_cosine():
    from doppel.metrics import mean_pair_cosine
    silent = mel_embeddings(AudioBatch(np.zeros((2, RATE)), RATE, 1.0))
    assert mean_pair_cosine(silent, silent) == pytest.approx(1.0)
