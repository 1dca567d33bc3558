"""The stochastic effect chain: filters, pitch/time shifts, reverb.

Each effect fires independently with probability 0.5; decisions and
parameters are drawn once per mini-batch, keyed by (seed, mini-batch index),
so augmentation is reproducible and parallelizable.
"""

import warnings

import numpy as np

from doppel import apply_chain, build_architecture, render, sample_params
from doppel.fx import (FxConfig, chain_plan, high_pass, pitch_shift, reverb,
                       default_impulse_responses)
from doppel.synth import NyquistWarning

warnings.simplefilter("ignore", NyquistWarning)

voice = build_architecture("Voice")
audio = render(voice, sample_params(8, voice, seed=2), seed=2)

# individual effects
bright = high_pass(audio, cutoff_hz=600.0)
up = pitch_shift(audio, semitones=2.0)
wet = reverb(audio, default_impulse_responses()[1])
print("high-pass RMS ratio:",
      round(float(np.sqrt((bright.samples ** 2).mean()
                          / (audio.samples ** 2).mean())), 3))
print("pitch-shift preserves shape:", up.samples.shape == audio.samples.shape)
print("reverb peak matches input:",
      np.allclose(np.abs(wet.samples).max(axis=1),
                  np.abs(audio.samples).max(axis=1)))

# the full chain, mini-batched
config = FxConfig(mini_batch_size=4)
augmented = apply_chain(audio, config, seed=0)
print("chain output shape:", augmented.samples.shape)

# inspect the decisions the chain made for the first few mini-batches
for j, plan in enumerate(chain_plan(config, seed=0, n_minibatches=2)):
    fired = [e for e in ("highpass", "lowpass", "pitch_shift", "time_shift",
                         "reverb") if plan[f"apply_{e}"]]
    print(f"mini-batch {j}: applied {fired or 'nothing'}")

# long-run application rate hovers at the configured probability
plans = chain_plan(config, seed=0, n_minibatches=2000)
rate = np.mean([p["apply_reverb"] for p in plans])
print(f"reverb application rate over 2000 mini-batches: {rate:.3f}")
