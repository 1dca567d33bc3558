"""Render random sounds from the three synth architectures.

Walks through the core objects: an architecture spec (parameter table +
routing loaded from the shipped JSON), a normalized parameter matrix, and
batch rendering to WAV files.
"""

import warnings
from pathlib import Path

import numpy as np

from doppel import build_architecture, render, sample_params
from doppel.synth import NyquistWarning
from doppel.tensorio import write_wav

warnings.simplefilter("ignore", NyquistWarning)

out_dir = Path("demo_out/synthesis")
out_dir.mkdir(parents=True, exist_ok=True)

for name in ("Voice", "VoiceFM", "ParametricSynth"):
    arch = build_architecture(name)
    print(f"{name}: {arch.m_s} parameters, {len(arch.modules)} modules")

    # theta ~ U(0,1)^(k x m_s); rendering is deterministic in (theta, seed)
    theta = sample_params(4, arch, seed=0)
    audio = render(arch, theta, sample_rate_hz=16000, duration_s=1.0, seed=0)
    print(f"  rendered {audio.k} x {audio.n} samples, "
          f"peak {np.abs(audio.samples).max():.3f}")

    for i in range(audio.k):
        write_wav(out_dir / f"{name.lower()}_{i}.wav", audio.samples[i],
                  audio.sample_rate_hz)

# a parameter vector is interpretable: columns map to named synth controls
voice = build_architecture("Voice")
theta = sample_params(1, voice, seed=7)
natural = voice.denormalize(theta.values)[0]
for pname in ("keyboard.midi_f0", "keyboard.duration", "lfo_1.freq_hz",
              "adsr_1.attack", "mixer.level_noise"):
    j = voice.param_index(pname)
    print(f"{pname:22s} norm={theta.values[0, j]:.3f} "
          f"natural={natural[j]:.3f}")

print(f"\nwrote WAVs to {out_dir}/")
