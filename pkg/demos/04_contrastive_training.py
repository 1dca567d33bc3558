"""Desk-scale contrastive training on live pair streams.

Runs the full loop (sample -> perturb -> render -> log-mel -> embed ->
alignment/uniformity -> SGD) with a small in-package encoder. Nothing is
stored on disk: every batch is regenerated from counter-based streams.
"""

import warnings

from doppel import TrainConfig, build_architecture, train_toy
from doppel.contrastive import TOY_CONFIG, lr_at
from doppel.synth import NyquistWarning
from doppel.tensorio import write_csv

warnings.simplefilter("ignore", NyquistWarning)

voice = build_architecture("Voice")

# a few epochs of the toy configuration (k=64 pairs per batch)
config = TrainConfig(**{**TOY_CONFIG, "epochs": 3, "sounds_per_epoch": 1000})
print(f"base LR {config.base_lr:.4f} "
      f"(linear scaling 0.12 x {config.total_batch}/256)")
print("schedule:", [round(lr_at(e, config), 5) for e in range(config.epochs)])

encoder, trace = train_toy(voice, delta=0.25, config=config,
                           encoder_spec={"kind": "linear", "embed_dim": 32},
                           seed=0)

print(f"\n{'epoch':>5} {'split':>6} {'align':>9} {'unif':>9} {'total':>9}")
for row in trace:
    print(f"{row.epoch:>5} {row.split:>6} {row.align:9.4f} {row.unif:9.4f} "
          f"{row.total:9.4f}")

write_csv("demo_out_trace.csv",
          ["epoch", "split", "align", "unif", "total", "lr"],
          [r.astuple() for r in trace])
print("\nloss trace written to demo_out_trace.csv")
print("(the reference-scale schedule: 200 epochs, 100k sounds/epoch, "
      "batch 768, peak LR 0.72 with decade drops at epochs 155/170/185)")
