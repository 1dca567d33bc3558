"""Command-line surface.

Subcommands: ``gen``, ``pairs``, ``bench``, ``simcurve``, ``train-toy`` and
``metrics {fad|cu|flux|flatness|mix}``. Every generating command writes a
``manifest.json`` next to its outputs; re-running with the manifest's config
reproduces the files bitwise (wall time aside). ``DOPPEL_SEED`` supplies the
default seed, and ``--config`` JSON files sit between CLI flags and built-in
defaults in precedence.

Exit codes: 0 success, 2 invalid configuration, 3 I/O failure, 4 numerical
failure.
"""

from __future__ import annotations

import functools
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__, frontend, metrics
from .architectures import ARCHITECTURE_NAMES, build_architecture
from .contrastive import TOY_CONFIG, TrainConfig, train_toy
from .errors import NumericalError
from .pairs import generate_pair_batch, perturb_pair, sample_params
from .synth import render
from .tensorio import (read_tensor, read_wav, write_csv, write_manifest,
                       write_tensor, write_wav)

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


def _guard(fn):
    """Map library errors onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (click.ClickException, click.Abort):
            raise
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            click.echo(f"error: invalid configuration: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except OSError as exc:
            click.echo(f"error: I/O failure: {exc}", err=True)
            sys.exit(EXIT_IO)
        except (NumericalError, np.linalg.LinAlgError,
                FloatingPointError) as exc:
            click.echo(f"error: numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)

    return wrapper


def _load_config(config_path):
    if not config_path:
        return {}
    return json.loads(Path(config_path).read_text())


def _resolve(cli_kwargs: dict, config: dict, defaults: dict) -> dict:
    """Config precedence: explicit CLI flags > config file > defaults."""
    out = dict(defaults)
    out.update({k: v for k, v in config.items() if k in defaults})
    out.update({k: v for k, v in cli_kwargs.items() if v is not None})
    return out


seed_option = click.option("--seed", type=int, envvar="DOPPEL_SEED",
                           default=None, help="Seed (env: DOPPEL_SEED).")
config_option = click.option("--config", "config_path", type=click.Path(),
                             default=None, help="JSON config file.")


@click.group()
@click.version_option(version=__version__, prog_name="doppel")
def main():
    """Synthetic-audio pair generation and analysis."""


GEN_DEFAULTS = dict(arch="Voice", count=16, delta=None, out_dir="out",
                    fmt="float32", seed=0, sample_rate_hz=16000,
                    duration_s=1.0, mel=False, threads=1)


def _generate(kwargs, config_path, command):
    t0 = time.time()
    file_cfg = _load_config(config_path)
    if "batch_size" in file_cfg:  # sampler config-key alias for count
        file_cfg.setdefault("count", file_cfg.pop("batch_size"))
    cfg = _resolve(kwargs, file_cfg, GEN_DEFAULTS)
    arch = build_architecture(cfg["arch"])
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []

    def save_wave(name, row):
        path = out_dir / f"{name}.wav"
        write_wav(path, row, cfg["sample_rate_hz"], cfg["fmt"])
        outputs.append(path.name)

    def save_tensor(name, array):
        path = write_tensor(out_dir / name, array)
        outputs.append(path.name)
        outputs.append(path.with_suffix(".json").name)

    k, seed = int(cfg["count"]), int(cfg["seed"])
    if cfg["delta"] is None:
        theta = sample_params(k, arch, seed)
        audio = render(arch, theta, cfg["sample_rate_hz"], cfg["duration_s"],
                       seed=seed, threads=int(cfg["threads"]))
        for i in range(k):
            save_wave(f"{i:06d}", audio.samples[i])
        save_tensor("theta", theta.values)
        if cfg["mel"]:
            save_tensor("mel", frontend.log_mel(audio))
    else:
        a1, a2, pair = generate_pair_batch(
            arch, k, float(cfg["delta"]), seed, cfg["sample_rate_hz"],
            cfg["duration_s"], threads=int(cfg["threads"]))
        for i in range(k):
            save_wave(f"{i:06d}_a", a1.samples[i])
            save_wave(f"{i:06d}_b", a2.samples[i])
        save_tensor("theta", pair.theta.values)
        save_tensor("theta_a", pair.theta1.values)
        save_tensor("theta_b", pair.theta2.values)
        if cfg["mel"]:
            save_tensor("mel_a", frontend.log_mel(a1))
            save_tensor("mel_b", frontend.log_mel(a2))
    write_manifest(out_dir, command, cfg, seed, outputs, time.time() - t0)
    click.echo(f"wrote {len(outputs)} files to {out_dir}")


def _gen_options(fn):
    for option in reversed([
            click.option("--arch", type=click.Choice(ARCHITECTURE_NAMES),
                         default=None),
            click.option("--count", type=int, default=None,
                         help="Sounds (or pairs) to generate."),
            click.option("--out-dir", default=None),
            click.option("--format", "fmt",
                         type=click.Choice(["float32", "pcm16"]),
                         default=None),
            click.option("--sample-rate-hz", type=int, default=None),
            click.option("--duration-s", type=float, default=None),
            click.option("--mel", is_flag=True, default=None,
                         help="Also export log-mel tensors."),
            click.option("--threads", type=int, default=None),
            seed_option, config_option]):
        fn = option(fn)
    return fn


@main.command()
@_gen_options
@click.option("--delta", type=float, default=None,
              help="If set, write perturbed pairs instead of single sounds.")
@_guard
def gen(config_path, **kwargs):
    """Generate WAVs (pairs when --delta is given) plus parameter tensors."""
    _generate(kwargs, config_path, "gen")


@main.command()
@_gen_options
@click.option("--delta", type=float, default=0.25, show_default=True)
@_guard
def pairs(config_path, **kwargs):
    """Generate positive-pair WAVs for a given perturbation factor."""
    _generate(kwargs, config_path, "pairs")


@main.command()
@click.option("--arch", type=click.Choice(ARCHITECTURE_NAMES), default="Voice")
@click.option("--batch", type=int, default=256, show_default=True)
@click.option("--seconds", type=float, default=5.0, show_default=True,
              help="Minimum wall time to measure.")
@click.option("--threads", type=int, default=1, show_default=True)
@seed_option
@_guard
def bench(arch, batch, seconds, threads, seed):
    """Measure synthesis throughput (sounds/sec and realtime factor)."""
    seed = seed or 0
    spec = build_architecture(arch)
    duration = 1.0
    theta = sample_params(batch, spec, seed)
    render(spec, theta, seed=seed, threads=threads)  # warm-up
    t0 = time.time()
    rendered = 0
    while time.time() - t0 < seconds:
        render(spec, theta, seed=seed, threads=threads)
        rendered += batch
    elapsed = time.time() - t0
    report = {
        "arch": arch, "batch": batch, "threads": threads,
        "sounds_per_s": rendered / elapsed,
        "realtime_factor": rendered * duration / elapsed,
        "elapsed_s": elapsed,
    }
    click.echo(json.dumps(report, indent=1))


@main.command()
@click.option("--arch", type=click.Choice(ARCHITECTURE_NAMES), default="Voice")
@click.option("--deltas", default="0.01,0.05,0.1,0.25,0.5", show_default=True,
              help="Comma-separated perturbation factors.")
@click.option("--k", type=int, default=128, show_default=True)
@click.option("--out", default="simcurve.csv", show_default=True)
@click.option("--embeddings", "emb_dir", type=click.Path(), default=None,
              help="Directory of external <delta>_a/<delta>_b tensor files.")
@seed_option
@_guard
def simcurve(arch, deltas, k, out, emb_dir, seed):
    """Mean pair cosine similarity and parameter distance per delta."""
    seed = seed or 0
    spec = build_architecture(arch)
    grid = [float(d) for d in deltas.split(",")]
    rows = []
    for delta in grid:
        if emb_dir:
            e1 = read_tensor(Path(emb_dir) / f"{delta:g}_a.f32")
            e2 = read_tensor(Path(emb_dir) / f"{delta:g}_b.f32")
            theta = sample_params(k, spec, seed)
            t1, t2 = perturb_pair(theta, delta, seed)
        else:
            a1, a2, pair = generate_pair_batch(spec, k, delta, seed)
            e1 = frontend.mel_embeddings(a1)
            e2 = frontend.mel_embeddings(a2)
            t1, t2 = pair.theta1, pair.theta2
        cos = metrics.mean_pair_cosine(e1, e2)
        param_l2 = float(np.mean(np.linalg.norm(
            t1.values - t2.values, axis=1)))
        rows.append((delta, cos, param_l2))
    write_csv(out, ["delta", "mean_cosine", "mean_param_l2"], rows)
    click.echo(f"wrote {out}")


@main.command("train-toy")
@click.argument("config_file", type=click.Path(exists=True), required=False)
@click.option("--arch", type=click.Choice(ARCHITECTURE_NAMES), default="Voice")
@click.option("--delta", type=float, default=0.25, show_default=True)
@click.option("--out", default="trace.csv", show_default=True)
@seed_option
@_guard
def train_toy_cmd(config_file, arch, delta, out, seed):
    """Run the desk-scale contrastive loop and write the loss trace CSV."""
    t0 = time.time()
    seed = seed or 0
    raw = json.loads(Path(config_file).read_text()) if config_file else {}
    arch = raw.pop("arch", arch)
    delta = raw.pop("delta", delta)
    seed = raw.pop("seed", seed)
    encoder_spec = raw.pop("encoder", None)
    config = TrainConfig(**{**TOY_CONFIG, **raw})
    spec = build_architecture(arch)
    _, trace = train_toy(spec, delta, config, encoder_spec, seed=seed)
    out = Path(out)
    write_csv(out, ["epoch", "split", "align", "unif", "total", "lr"],
              [r.astuple() for r in trace])
    write_manifest(out.parent if out.parent != Path("") else Path("."),
                   "train-toy",
                   {**json.loads(config.to_json()), "arch": arch,
                    "delta": delta}, seed, [out.name], time.time() - t0)
    click.echo(f"wrote {out}")


@main.group(name="metrics")
def metrics_group():
    """Dataset characterization metrics."""


@metrics_group.command("fad")
@click.argument("embeddings_a", type=click.Path(exists=True))
@click.argument("embeddings_b", type=click.Path(exists=True))
@_guard
def metrics_fad(embeddings_a, embeddings_b):
    """Fréchet distance between Gaussians fit to two embedding files."""
    stats_a = metrics.fit_gaussian(read_tensor(embeddings_a))
    stats_b = metrics.fit_gaussian(read_tensor(embeddings_b))
    value = metrics.frechet_distance(stats_a, stats_b)
    click.echo(json.dumps({"fad": value, "n_a": stats_a.n, "n_b": stats_b.n}))


@metrics_group.command("cu")
@click.argument("probabilities", type=click.Path(exists=True))
@click.option("--out", default="cu.csv", show_default=True)
@_guard
def metrics_cu(probabilities, out):
    """Causal-uncertainty proxies from a classifier probability matrix."""
    h_cu, h_p, s_conf = metrics.causal_uncertainty(read_tensor(probabilities))
    write_csv(out, ["h_cu", "h_p", "s_conf"],
              zip(h_cu.tolist(), h_p.tolist(), s_conf.tolist()))
    summary = {"mean_h_cu": float(h_cu.mean()), "mean_h_p": float(h_p.mean()),
               "mean_s_conf": float(s_conf.mean()), "rows": int(h_cu.size)}
    click.echo(json.dumps(summary))


def _clip_spectra(paths):
    for path in paths:
        audio = read_wav(path)
        yield path, frontend.magnitude_spectrogram(
            audio.samples, audio.sample_rate_hz)[0]


@metrics_group.command("flux")
@click.argument("wavs", nargs=-1, type=click.Path(exists=True), required=True)
@click.option("--out", default="flux.csv", show_default=True)
@_guard
def metrics_flux(wavs, out):
    """Spectral flux per clip."""
    rows = [(Path(p).name, metrics.spectral_flux(spec))
            for p, spec in _clip_spectra(wavs)]
    write_csv(out, ["clip", "flux"], rows)
    click.echo(f"wrote {out}")


@metrics_group.command("flatness")
@click.argument("wavs", nargs=-1, type=click.Path(exists=True), required=True)
@click.option("--out", default="flatness.csv", show_default=True)
@_guard
def metrics_flatness(wavs, out):
    """Mean spectral flatness per clip."""
    rows = [(Path(p).name, float(metrics.spectral_flatness(spec).mean()))
            for p, spec in _clip_spectra(wavs)]
    write_csv(out, ["clip", "flatness"], rows)
    click.echo(f"wrote {out}")


@metrics_group.command("mix")
@click.argument("wavs", nargs=-1, type=click.Path(exists=True), required=True)
@click.option("--segments", type=int, default=5, show_default=True)
@click.option("--out", default="mix.wav", show_default=True)
@seed_option
@_guard
def metrics_mix(wavs, segments, out, seed):
    """Layer one-second excerpts of the input clips into a dense mixture."""
    seed = seed or 0
    clips = [read_wav(p) for p in wavs]
    mixed = metrics.mix_segments(clips, segments, seed)
    write_wav(out, mixed.samples[0], mixed.sample_rate_hz)
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
