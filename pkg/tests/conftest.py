import numpy as np
import pytest

from doppel.synth import AudioBatch


def fft_peak_hz(samples: np.ndarray, rate_hz: int) -> float:
    """Dominant-bin frequency of a windowed FFT (independent pitch oracle)."""
    samples = np.asarray(samples).ravel()
    mag = np.abs(np.fft.rfft(samples * np.hanning(samples.size)))
    return np.argmax(mag) * rate_hz / samples.size


def band_energy(samples: np.ndarray, freq_hz: float, rate_hz: int,
                halfwidth: int = 3) -> float:
    """Windowed FFT energy within +/- halfwidth bins of a frequency."""
    samples = np.asarray(samples).ravel()
    mag = np.abs(np.fft.rfft(samples * np.hanning(samples.size))) ** 2
    b = int(round(freq_hz * samples.size / rate_hz))
    return float(mag[max(0, b - halfwidth):b + halfwidth + 1].sum())


def tone(freq_hz: float, rate_hz: int = 16000, duration_s: float = 1.0,
         amp: float = 0.5) -> AudioBatch:
    t = np.arange(int(round(rate_hz * duration_s))) / rate_hz
    return AudioBatch(amp * np.sin(2 * np.pi * freq_hz * t)[None, :],
                      rate_hz, duration_s)


@pytest.fixture
def rng():
    return np.random.default_rng(0xBEEF)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance gates' pass/fail lines at the end of the run."""
    try:
        from test_acceptance import _RESULTS
    except ImportError:
        return
    if _RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in _RESULTS:
            terminalreporter.write_line(line)
