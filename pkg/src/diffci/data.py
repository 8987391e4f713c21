"""Dataset ingestion, synthetic 1D signal generation, and persistence.

Checkpoints are a binary container: an 8-byte magic, a little-endian u32
version, an architecture block, a JSON provenance blob, named float64
tensor records, and a trailing 64-bit checksum over all preceding bytes.
Signal CSVs are written with shortest round-trip float formatting so a
reload reproduces the exact float64 values.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .network import DenoiserParams

__all__ = [
    "Normalization",
    "SignalDataset",
    "DatasetFormatError",
    "CheckpointError",
    "BadMagicError",
    "VersionMismatchError",
    "ChecksumError",
    "ShapeMismatchError",
    "load_delimited",
    "synth_1d",
    "save_checkpoint",
    "load_checkpoint",
    "write_signals_csv",
    "read_signals_csv",
    "schedule_fingerprint",
]

_MAGIC = b"DGATECK1"
_VERSION = 1


class DatasetFormatError(ValueError):
    """Malformed dataset file (ragged rows, non-numeric cells, empty)."""


class CheckpointError(RuntimeError):
    """Base class for checkpoint load failures."""


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


class ShapeMismatchError(CheckpointError):
    pass


@dataclass(frozen=True)
class Normalization:
    """Affine transform applied at load: stored = (raw - shift) / scale."""

    shift: float
    scale: float


@dataclass
class SignalDataset:
    signals: np.ndarray               # [N, D]
    labels: np.ndarray | None
    D: int
    normalization: Normalization

    def __len__(self) -> int:
        return self.signals.shape[0]

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return x * self.normalization.scale + self.normalization.shift


def _standardize(raw: np.ndarray) -> tuple[np.ndarray, Normalization]:
    shift = float(raw.mean())
    scale = float(raw.std())
    if scale == 0.0:
        scale = 1.0
    return (raw - shift) / scale, Normalization(shift, scale)


def _sniff_delimiter(line: str) -> str | None:
    if "," in line:
        return ","
    if "\t" in line:
        return "\t"
    return None  # any whitespace


def load_delimited(path, has_label_column: bool = False,
                   normalize: bool = True) -> SignalDataset:
    """Parse a numeric CSV/TSV/whitespace table into a dataset.

    With has_label_column the first column is read as an integer label.
    The values are globally standardized to zero mean and unit variance
    (one shift/scale for the whole table, preserving waveform shape).
    """
    text = Path(path).read_text()
    delim = None
    rows: list[list[float]] = []
    labels: list[int] = []
    ncols = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if delim is None:
            delim = _sniff_delimiter(line) or ""
        cells = line.split(delim) if delim else line.split()
        cells = [c.strip() for c in cells if c.strip() != ""]
        if ncols is None:
            ncols = len(cells)
        elif len(cells) != ncols:
            raise DatasetFormatError(
                f"{path}: line {lineno} has {len(cells)} columns, expected {ncols}")
        vals = []
        for c in cells:
            try:
                vals.append(float(c))
            except ValueError:
                raise DatasetFormatError(
                    f"{path}: line {lineno}: non-numeric cell {c!r}") from None
        if has_label_column:
            labels.append(int(vals[0]))
            vals = vals[1:]
        rows.append(vals)
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    signals = np.array(rows, dtype=np.float64)
    if signals.shape[1] == 0:
        raise DatasetFormatError(f"{path}: rows contain no signal columns")
    if normalize:
        signals, norm = _standardize(signals)
    else:
        norm = Normalization(0.0, 1.0)
    lab = np.array(labels, dtype=np.int64) if has_label_column else None
    return SignalDataset(signals, lab, int(signals.shape[1]), norm)


def synth_1d(n: int, D: int, classes: int, seed: int,
             noise_scale: float = 0.1, normalize: bool = True) -> SignalDataset:
    """Seeded synthetic dataset of bump-shaped 1D signals.

    Each class has a fixed template made of 2-3 Gaussian bumps with
    class-specific centers, widths, and signed amplitudes; each signal is
    its class template plus isotropic noise. Pure function of the arguments.
    """
    if min(n, D, classes) < 1:
        raise ValueError("n, D, and classes must all be >= 1")
    rng = np.random.default_rng(seed)
    x = np.arange(D, dtype=np.float64)
    templates = np.zeros((classes, D))
    for c in range(classes):
        n_bumps = int(rng.integers(2, 4))
        centers = rng.uniform(0.1 * D, 0.9 * D, n_bumps)
        widths = rng.uniform(0.04 * D, 0.15 * D, n_bumps)
        amps = rng.uniform(0.6, 1.6, n_bumps) * rng.choice([-1.0, 1.0], n_bumps)
        for a, mu, w in zip(amps, centers, widths):
            templates[c] += a * np.exp(-0.5 * ((x - mu) / w) ** 2)
    labels = np.arange(n, dtype=np.int64) % classes
    signals = templates[labels] + noise_scale * rng.standard_normal((n, D))
    if normalize:
        signals, norm = _standardize(signals)
    else:
        norm = Normalization(0.0, 1.0)
    return SignalDataset(signals, labels, int(D), norm)


def schedule_fingerprint(schedule) -> str:
    """Stable hex digest of the schedule's beta array."""
    return hashlib.blake2b(schedule.betas.tobytes(), digest_size=8).hexdigest()


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def save_checkpoint(path, params: DenoiserParams, provenance: dict) -> None:
    """Write params plus a provenance dict to a checksummed binary file."""
    buf = bytearray()
    buf += _MAGIC
    buf += struct.pack("<I", _VERSION)
    buf += struct.pack("<II", params.input_dim, params.embed_dim)
    buf += struct.pack("<I", len(params.hidden_dims))
    for h in params.hidden_dims:
        buf += struct.pack("<I", h)
    buf += _pack_str(json.dumps(provenance, sort_keys=True))
    tensors = []
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        tensors.append((f"w{i}", w))
        tensors.append((f"b{i}", b))
    buf += struct.pack("<I", len(tensors))
    for name, arr in tensors:
        buf += _pack_str(name)
        buf += struct.pack("<I", arr.ndim)
        for d in arr.shape:
            buf += struct.pack("<I", d)
        buf += np.ascontiguousarray(arr, dtype="<f8").tobytes()
    digest = hashlib.blake2b(bytes(buf), digest_size=8).digest()
    buf += digest
    Path(path).write_bytes(bytes(buf))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.off = 0

    def take(self, n: int) -> bytes:
        if self.off + n > len(self.data):
            raise ChecksumError("checkpoint truncated")
        out = self.data[self.off:self.off + n]
        self.off += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")


def load_checkpoint(path, expected_input_dim: int | None = None):
    """Read a checkpoint; returns (DenoiserParams, provenance dict).

    Verifies magic, version, checksum, and tensor shapes against the stored
    architecture. If expected_input_dim is given, mismatching signal length
    raises ShapeMismatchError naming both dimensions.
    """
    data = Path(path).read_bytes()
    if len(data) < len(_MAGIC) + 12 or data[:len(_MAGIC)] != _MAGIC:
        raise BadMagicError(f"{path}: not a checkpoint file (bad magic)")
    body, stored = data[:-8], data[-8:]
    if hashlib.blake2b(body, digest_size=8).digest() != stored:
        raise ChecksumError(f"{path}: checksum mismatch, file is corrupt")
    r = _Reader(body)
    r.take(len(_MAGIC))
    version = r.u32()
    if version != _VERSION:
        raise VersionMismatchError(
            f"{path}: checkpoint version {version}, expected {_VERSION}")
    D, E = r.u32(), r.u32()
    hidden = tuple(r.u32() for _ in range(r.u32()))
    provenance = json.loads(r.string())
    if expected_input_dim is not None and D != expected_input_dim:
        raise ShapeMismatchError(
            f"{path}: checkpoint is for {D}-dimensional signals but the run "
            f"expects {expected_input_dim}")
    dims = (D + E, *hidden, D)
    expected_shapes = {}
    for i, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        expected_shapes[f"w{i}"] = (fan_in, fan_out)
        expected_shapes[f"b{i}"] = (fan_out,)
    n_tensors = r.u32()
    tensors = {}
    for _ in range(n_tensors):
        name = r.string()
        rank = r.u32()
        shape = tuple(r.u32() for _ in range(rank))
        size = int(np.prod(shape, dtype=np.int64)) if rank else 1
        arr = np.frombuffer(r.take(size * 8), dtype="<f8").reshape(shape).copy()
        exp = expected_shapes.get(name)
        if exp is None or shape != exp:
            raise ShapeMismatchError(
                f"{path}: tensor {name} has shape {shape}, architecture "
                f"expects {exp}")
        tensors[name] = arr
    if set(tensors) != set(expected_shapes):
        missing = sorted(set(expected_shapes) - set(tensors))
        raise ShapeMismatchError(f"{path}: missing tensors {missing}")
    n_layers = len(dims) - 1
    params = DenoiserParams(D, E, hidden,
                            [tensors[f"w{i}"] for i in range(n_layers)],
                            [tensors[f"b{i}"] for i in range(n_layers)])
    return params, provenance


def write_signals_csv(path, signals: np.ndarray) -> None:
    """One comma-separated row per signal, exact float64 round-trip."""
    signals = np.atleast_2d(np.asarray(signals, dtype=np.float64))
    if signals.size == 0:
        raise ValueError("refusing to write an empty signal set")
    with open(path, "w") as fh:
        for row in signals:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_signals_csv(path) -> np.ndarray:
    """Inverse of write_signals_csv."""
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            rows.append([float(c) for c in line.split(",")])
    if not rows:
        raise DatasetFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)
