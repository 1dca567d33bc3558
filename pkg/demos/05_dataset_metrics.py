"""Dataset characterization: FAD, causal-uncertainty proxies, spectral
features, PCA pair paths, and dense segment mixtures.

External embeddings/probabilities normally arrive as .f32/.json tensor files
(see doppel.tensorio); here small synthetic stand-ins keep the demo
self-contained.
"""

import warnings

import numpy as np

from doppel import (build_architecture, causal_uncertainty, fit_gaussian,
                    frechet_distance, mix_segments, pca_2d, render,
                    sample_params, spectral_flatness, spectral_flux)
from doppel.frontend import magnitude_spectrogram, mel_embeddings
from doppel.pairs import generate_pair_batch
from doppel.synth import NyquistWarning

warnings.simplefilter("ignore", NyquistWarning)
g = np.random.default_rng(0)

# --- Fréchet distance between embedding Gaussians ------------------------
base = g.standard_normal((4000, 16))
shifted = g.standard_normal((4000, 16)) + np.r_[2.0, np.zeros(15)]
fad = frechet_distance(fit_gaussian(base), fit_gaussian(shifted))
print(f"FAD between N(0,I) and N((2,0,...),I) samples: {fad:.3f} "
      f"(closed form 4.0)")

# --- causal-uncertainty proxies on classifier probabilities ---------------
probs = np.array([[1.0, 0.0, 0.0],        # certain
                  [0.5, 0.3, 0.2],        # mixed
                  [1 / 3, 1 / 3, 1 / 3]])  # maximally uncertain
h_cu, h_p, s_conf = causal_uncertainty(probs)
for row, (a, b, c) in enumerate(zip(h_cu, h_p, s_conf)):
    print(f"row {row}: H_cu={a:.3f} H_p={b:.3f} S_conf={c:.3f}")

# --- spectral features on synthetic sounds --------------------------------
voice = build_architecture("Voice")
audio = render(voice, sample_params(16, voice, seed=3), seed=3)
fluxes, flats = [], []
for row in audio.samples:
    spec = magnitude_spectrogram(row[None])[0]
    fluxes.append(spectral_flux(spec))
    flats.append(float(spectral_flatness(spec).mean()))
print(f"synthetic set: flux mean {np.mean(fluxes):.4f}, "
      f"flatness mean {np.mean(flats):.4f}")

# --- PCA view of positive pairs -------------------------------------------
a1, a2, _ = generate_pair_batch(voice, 48, delta=0.25, seed=5)
emb = np.vstack([mel_embeddings(a1), mel_embeddings(a2)])
proj, (v1, v2) = pca_2d(emb)
paths = np.linalg.norm(proj[:48] - proj[48:], axis=1)
print(f"PCA explained variances: {v1:.1f}, {v2:.1f}; "
      f"mean pair path length {paths.mean():.2f}")

# --- dense mixtures (the VGGSound-Mix recipe on stand-in clips) -----------
clips = [render(voice, sample_params(1, voice, seed=s), seed=s, duration_s=2.0)
         for s in (10, 11, 12)]
mixture = mix_segments(clips, n_segments=5, seed=1)
spec = magnitude_spectrogram(mixture.samples)[0]
print(f"5-segment mixture: flux {spectral_flux(spec):.4f} "
      f"(single clips above average {np.mean(fluxes):.4f})")
