"""Datasets, IDX ingestion and device partitioning.

Every function here is a pure function of its inputs and seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, p) float64 in [0, 1]
    labels: np.ndarray  # (n,) int64 in [0, C)
    n_classes: int

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.ndim != 1:
            raise ConfigError("features must be 2-D and labels 1-D")
        n, p = self.features.shape
        if n < 1 or p < 1 or self.n_classes < 2:
            raise ConfigError(f"invalid dataset dimensions n={n} p={p} C={self.n_classes}")
        if len(self.labels) != n:
            raise ConfigError(f"{n} feature rows but {len(self.labels)} labels")
        if self.features.min() < 0.0 or self.features.max() > 1.0:
            raise ConfigError("feature entries must lie in [0, 1]")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ConfigError(f"labels must lie in [0, {self.n_classes})")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Partition:
    indices: list[np.ndarray]

    @property
    def sizes(self) -> list[int]:
        return [len(ix) for ix in self.indices]

    @property
    def n_devices(self) -> int:
        return len(self.indices)


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed) % (1 << 64)))


def synth_gaussian_mixture(
    n: int, p: int, n_classes: int, class_sep: float, seed: int
) -> Dataset:
    """Draw ``n`` samples from ``n_classes`` unit-variance Gaussian blobs.

    Class means sit at ``class_sep`` times the standard basis vectors (a regular
    simplex) when ``n_classes <= p``; otherwise at random directions of norm
    ``class_sep``. Labels are balanced to within one sample and the features are
    min-max scaled per column into [0, 1].
    """
    if n < n_classes or p < 2 or n_classes < 2 or not class_sep > 0:
        raise ConfigError(
            f"synthetic dataset needs n >= C, p >= 2, C >= 2, class_sep > 0 "
            f"(got n={n}, p={p}, C={n_classes}, class_sep={class_sep})"
        )
    rng = _rng(seed)
    if n_classes <= p:
        means = np.zeros((n_classes, p))
        means[np.arange(n_classes), np.arange(n_classes)] = class_sep
    else:
        dirs = rng.standard_normal((n_classes, p))
        means = class_sep * dirs / np.linalg.norm(dirs, axis=1, keepdims=True)

    labels = rng.permutation(np.arange(n) % n_classes)
    x = means[labels] + rng.standard_normal((n, p))
    lo, hi = x.min(axis=0), x.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    x = np.clip((x - lo) / span, 0.0, 1.0)
    return Dataset(x, labels.astype(np.int64), n_classes)


def _read_idx(path: Path, magic: int, ndim: int) -> tuple[tuple[int, ...], bytes]:
    raw = Path(path).read_bytes()
    if len(raw) < 4:
        raise ParseError(f"{path}: truncated header", len(raw))
    (got,) = struct.unpack_from(">I", raw, 0)
    if got != magic:
        raise ParseError(f"{path}: bad magic number 0x{got:08x}, expected 0x{magic:08x}", 0)
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise ParseError(f"{path}: truncated dimension header", len(raw))
    dims = struct.unpack_from(">" + "I" * ndim, raw, 4)
    expected = header + int(np.prod(dims, dtype=np.int64))
    if len(raw) < expected:
        raise ParseError(f"{path}: truncated payload, expected {expected} bytes", len(raw))
    if len(raw) > expected:
        raise ParseError(f"{path}: trailing bytes after payload", expected)
    return dims, raw[header:]


def load_idx(images_path, labels_path, n_classes: int = 10) -> Dataset:
    """Read an uncompressed IDX image/label pair (MNIST layout)."""
    (count, rows, cols), pixels = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    (n_labels,), label_bytes = _read_idx(labels_path, IDX_LABELS_MAGIC, 1)
    if count != n_labels:
        raise ParseError(f"{count} images but {n_labels} labels in {labels_path}", 4)
    x = np.frombuffer(pixels, dtype=np.uint8).reshape(count, rows * cols) / 255.0
    y = np.frombuffer(label_bytes, dtype=np.uint8).astype(np.int64)
    if count and y.max() >= n_classes:
        bad = int(np.argmax(y >= n_classes))
        raise ParseError(f"label {y[bad]} outside [0, {n_classes})", 8 + bad)
    return Dataset(x, y, n_classes)


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path) -> None:
    """Inverse of :func:`load_idx` for uint8 arrays; used to build fixtures."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    count, rows, cols = images.shape
    Path(images_path).write_bytes(
        struct.pack(">IIII", IDX_IMAGES_MAGIC, count, rows, cols) + images.tobytes()
    )
    Path(labels_path).write_bytes(
        struct.pack(">II", IDX_LABELS_MAGIC, len(labels)) + labels.tobytes()
    )


def partition_iid(ds: Dataset, n_devices: int, seed: int) -> Partition:
    if n_devices < 1 or n_devices > ds.n:
        raise ConfigError(f"cannot split {ds.n} samples over {n_devices} devices")
    order = _rng(seed).permutation(ds.n)
    return Partition([np.sort(part) for part in np.array_split(order, n_devices)])


def partition_noniid_shards(
    ds: Dataset, n_devices: int, shards_per_device: int, seed: int
) -> Partition:
    """Label-sorted shard partitioning.

    Samples are sorted by label (stable, so ties keep index order), cut into
    ``n_devices * shards_per_device`` equal contiguous shards, and each device
    receives ``shards_per_device`` shards drawn without replacement. The
    ``n mod n_shards`` highest-label samples are discarded.
    """
    if n_devices < 1 or shards_per_device < 1:
        raise ConfigError("need at least one device and one shard per device")
    n_shards = n_devices * shards_per_device
    if n_shards > ds.n:
        raise ConfigError(f"{n_shards} shards requested from {ds.n} samples")
    shard_size = ds.n // n_shards
    by_label = np.argsort(ds.labels, kind="stable")[: n_shards * shard_size]
    shards = by_label.reshape(n_shards, shard_size)
    assignment = _rng(seed).permutation(n_shards).reshape(n_devices, shards_per_device)
    return Partition([np.sort(shards[row].ravel()) for row in assignment])


def split_train_val(
    indices, val_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    indices = np.asarray(indices)
    if len(indices) < 2:
        raise ConfigError("need at least two indices to split train/validation")
    if not 0.0 < val_fraction < 1.0:
        raise ConfigError(f"val_fraction must be in (0, 1), got {val_fraction}")
    n_val = min(len(indices) - 1, max(1, round(val_fraction * len(indices))))
    shuffled = indices[_rng(seed).permutation(len(indices))]
    return np.sort(shuffled[n_val:]), np.sort(shuffled[:n_val])
