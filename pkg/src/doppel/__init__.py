"""doppel: batch virtual modular synthesis and contrastive-pair tooling.

Generate random synthetic sounds from three modular-synth architectures,
perturb their parameters with a single noise factor to produce positive
pairs for contrastive learning, and characterize the resulting datasets.
"""

from .architectures import (ARCHITECTURE_NAMES, ArchitectureSpec,
                            build_architecture)
from .contrastive import (TrainConfig, alignment_loss, lr_at, total_loss,
                          train_toy, uniformity_loss)
from .frontend import log_mel, mel_embeddings, resample
from .fx import FxConfig, apply_chain
from .metrics import (GaussianStats, causal_uncertainty,
                      cosine_similarity_curve, fit_gaussian,
                      frechet_distance, mean_pair_cosine, mix_segments,
                      pca_2d, spectral_flatness, spectral_flux)
from .pairs import (PairBatch, generate_pair_batch, iter_pair_batches,
                    perturb_pair, sample_params)
from .synth import (AudioBatch, ControlSignal, ParamMatrix, adsr_envelope,
                    lfo, modulation_mix, noise_gen, render, sine_vco,
                    square_saw_vco)

__version__ = "0.1.0"

__all__ = [
    "ARCHITECTURE_NAMES", "ArchitectureSpec", "AudioBatch", "ControlSignal",
    "FxConfig", "GaussianStats", "PairBatch", "ParamMatrix", "TrainConfig",
    "adsr_envelope", "alignment_loss", "apply_chain", "build_architecture",
    "causal_uncertainty", "cosine_similarity_curve", "fit_gaussian",
    "frechet_distance", "generate_pair_batch", "iter_pair_batches", "lfo",
    "log_mel", "lr_at", "mean_pair_cosine", "mel_embeddings", "mix_segments",
    "modulation_mix", "noise_gen", "pca_2d", "perturb_pair", "render",
    "resample", "sample_params", "sine_vco", "spectral_flatness",
    "spectral_flux", "square_saw_vco", "total_loss", "train_toy",
    "uniformity_loss",
]
