"""File I/O: WAV audio, raw float tensors with JSON sidecars, manifests.

Tensor interchange format: a flat little-endian float32 file ``name.f32``
(C layout) next to a sidecar ``name.json`` holding ``{"shape", "dtype",
"layout"}``. CSV is accepted on read for small matrices.
"""

from __future__ import annotations

import json
import os
import tempfile
import time
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .synth import AudioBatch

TOOL_VERSION = "0.1.0"

WAV_FORMATS = ("float32", "pcm16")


def write_wav(path, samples: np.ndarray, rate_hz: int,
              fmt: str = "float32") -> None:
    """Write a mono waveform; ``fmt`` picks 32-bit float or 16-bit PCM."""
    samples = np.asarray(samples, dtype=np.float64).ravel()
    if fmt == "float32":
        data = samples.astype(np.float32)
    elif fmt == "pcm16":
        data = np.clip(np.round(samples * 32768.0), -32768, 32767).astype(np.int16)
    else:
        raise ValueError(f"unknown WAV format {fmt!r}; use one of {WAV_FORMATS}")
    wavfile.write(str(path), rate_hz, data)


def read_wav(path) -> AudioBatch:
    """Read a WAV file as a single-row AudioBatch in [-1, 1] float."""
    rate, data = wavfile.read(str(path))
    data = np.asarray(data)
    if data.ndim > 1:
        data = data.mean(axis=1)
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    else:
        data = data.astype(np.float64)
    return AudioBatch(data[None, :], int(rate), data.size / rate)


def tensor_paths(base) -> tuple[Path, Path]:
    base = Path(base)
    if base.suffix in (".f32", ".json"):
        base = base.with_suffix("")
    return base.with_suffix(".f32"), base.with_suffix(".json")


def write_tensor(base, array: np.ndarray) -> Path:
    """Write ``array`` as flat little-endian float32 plus a JSON sidecar."""
    data_path, meta_path = tensor_paths(base)
    array = np.ascontiguousarray(array, dtype="<f4")
    data_path.write_bytes(array.tobytes())
    meta_path.write_text(json.dumps(
        {"shape": list(array.shape), "dtype": "float32", "layout": "C"}) + "\n")
    return data_path


def read_tensor(path) -> np.ndarray:
    """Read a tensor written by :func:`write_tensor`, or a CSV matrix."""
    path = Path(path)
    if path.suffix == ".csv":
        return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))
    data_path, meta_path = tensor_paths(path)
    meta = json.loads(meta_path.read_text())
    if meta.get("dtype", "float32") != "float32":
        raise ValueError(f"unsupported tensor dtype {meta['dtype']!r}")
    flat = np.frombuffer(data_path.read_bytes(), dtype="<f4")
    return flat.reshape(meta["shape"]).astype(np.float64)


def write_manifest(out_dir, command: str, config: dict, seed: int,
                   outputs: list[str], wall_time_s: float) -> Path:
    """Atomically write a run manifest next to the outputs."""
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "tool_version": TOOL_VERSION,
        "wall_time_s": wall_time_s,
        "outputs": outputs,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    target = out_dir / "manifest.json"
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".manifest.tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(manifest, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".10g")
    return str(v)
