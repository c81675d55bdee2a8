"""Dataset loading: IDX (MNIST-style) and CIFAR-10 binary formats,
normalization, deterministic splits and batching.

IDX layout (big endian): i32 magic (2051 images / 2049 labels), i32 dims,
then raw unsigned bytes. CIFAR-10 binary records are 3073 bytes: one label
byte followed by channel-planar 1024R + 1024G + 1024B pixels.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
CIFAR_RECORD_BYTES = 3073


class FormatError(ValueError):
    """Malformed dataset file (bad magic, truncated, wrong record size)."""


@dataclass
class Dataset:
    images: np.ndarray  # (N, H, W, C) float64 in [0, 1]
    labels: np.ndarray  # (N,) int64 in [0, 10)
    name: str

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ValueError(f"image count {len(self.images)} != label count {len(self.labels)}")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, indices: np.ndarray) -> "Dataset":
        return Dataset(self.images[indices], self.labels[indices], self.name)


@dataclass
class Split:
    train: Dataset
    val: Dataset
    seed: int


def _read_header(data: bytes, n_dims: int, path) -> tuple[int, ...]:
    header_len = 4 * (1 + n_dims)
    if len(data) < header_len:
        raise FormatError(f"{path}: truncated header ({len(data)} bytes)")
    return struct.unpack(f">{1 + n_dims}i", data[:header_len])


def load_idx_images(path) -> np.ndarray:
    """Raw uint8 image array (N, H, W) from an IDX image file."""
    data = Path(path).read_bytes() if not hasattr(path, "read") else path.read()
    magic, count, rows, cols = _read_header(data, 3, path)
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(f"{path}: bad image magic 0x{magic:08x}")
    expected = 16 + count * rows * cols
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(data)}")
    return np.frombuffer(data, dtype=np.uint8, offset=16).reshape(count, rows, cols)


def load_idx_labels(path) -> np.ndarray:
    """Raw uint8 label array (N,) from an IDX label file."""
    data = Path(path).read_bytes() if not hasattr(path, "read") else path.read()
    magic, count = _read_header(data, 1, path)
    if magic != IDX_LABEL_MAGIC:
        raise FormatError(f"{path}: bad label magic 0x{magic:08x}")
    if len(data) != 8 + count:
        raise FormatError(f"{path}: expected {8 + count} bytes, got {len(data)}")
    return np.frombuffer(data, dtype=np.uint8, offset=8)


def write_idx_images(path, images: np.ndarray) -> None:
    images = np.asarray(images, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">4i", IDX_IMAGE_MAGIC, *images.shape))
        f.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">2i", IDX_LABEL_MAGIC, len(labels)))
        f.write(labels.tobytes())


def load_mnist(images_path, labels_path, name: str = "mnist") -> Dataset:
    """Decode an IDX image/label pair into a normalized dataset."""
    raw = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if labels.max(initial=0) > 9:
        raise ValueError(f"label out of range: {labels.max()}")
    images = raw.astype(np.float64)[..., None] / 255.0
    return Dataset(images, labels.astype(np.int64), name)


def load_cifar10(paths: Sequence, name: str = "cifar10") -> Dataset:
    """Decode CIFAR-10 binary batch files into a normalized dataset."""
    images, labels = [], []
    for path in paths:
        data = Path(path).read_bytes()
        if len(data) % CIFAR_RECORD_BYTES != 0:
            raise FormatError(f"{path}: size {len(data)} not a multiple of {CIFAR_RECORD_BYTES}")
        records = np.frombuffer(data, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        batch_labels = records[:, 0]
        if len(batch_labels) and batch_labels.max() > 9:
            raise ValueError(f"{path}: label out of range: {batch_labels.max()}")
        # channel-planar (3, 32, 32) -> interleaved (32, 32, 3)
        planes = records[:, 1:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
        images.append(planes.astype(np.float64) / 255.0)
        labels.append(batch_labels.astype(np.int64))
    if not images:
        return Dataset(np.zeros((0, 32, 32, 3)), np.zeros(0, dtype=np.int64), name)
    return Dataset(np.concatenate(images), np.concatenate(labels), name)


def split_train_val(dataset: Dataset, fraction: float, seed: int) -> Split:
    """Seeded shuffle then partition; |val| = round(fraction * N)."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(dataset))
    n_val = round(fraction * len(dataset))
    return Split(train=dataset.subset(perm[n_val:]),
                 val=dataset.subset(perm[:n_val]), seed=seed)


def batches(dataset: Dataset, batch_size: int, seed: int,
            epoch: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Seeded per-epoch shuffle; the final partial batch is retained."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    rng = np.random.default_rng([seed, epoch])
    perm = rng.permutation(len(dataset))
    for start in range(0, len(dataset), batch_size):
        idx = perm[start:start + batch_size]
        yield dataset.images[idx], dataset.labels[idx]


def synthetic_two_class(n: int, seed: int, name: str = "synthetic") -> Dataset:
    """Linearly separable 8x8 toy set: class 1 carries a bright corner patch."""
    rng = np.random.default_rng(seed)
    images = rng.uniform(0.0, 0.2, size=(n, 8, 8, 1))
    labels = rng.integers(0, 2, size=n).astype(np.int64)
    images[labels == 1, :4, :4, :] += 0.8
    return Dataset(np.clip(images, 0.0, 1.0), labels, name)
