"""Bit-exact dataset ingestion: IDX and CIFAR-10 binary formats.

Both parsers are byte-total: every byte of a valid file is consumed, and
`serialize_*` re-emits the exact bytes a parsed file came from. Pixel values
are raw byte / 255.0 with no further normalization. Subsampling draws one
seeded Philox subset per split, in an order that is then served sequentially
by `iter_batches`.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError
from .rng import master_rng

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
CIFAR_RECORD_BYTES = 3073  # 1 label byte + 3 * 32 * 32 pixels
_SCALE = np.float32(255.0)


@dataclass
class Dataset:
    """Images [n, channels, H, W] in [0, 1] plus integer labels [n]."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.images.ndim != 4:
            raise DataFormatError(f"images must be 4-d, got shape {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise DataFormatError(
                f"labels shape {self.labels.shape} does not match {self.images.shape[0]} images"
            )

    def __len__(self):
        return self.images.shape[0]

    @property
    def n_classes(self):
        return 10

    def take(self, indices):
        indices = np.asarray(indices)
        return Dataset(self.images[indices], self.labels[indices])


def _read_u32_be(buf, offset, path, what):
    if offset + 4 > len(buf):
        raise DataFormatError(f"{path}: truncated while reading {what}")
    return struct.unpack_from(">I", buf, offset)[0]


def load_idx(images_path, labels_path):
    """Parse an IDX image/label file pair into a Dataset."""
    with open(images_path, "rb") as f:
        ibuf = f.read()
    with open(labels_path, "rb") as f:
        lbuf = f.read()

    magic = _read_u32_be(ibuf, 0, images_path, "magic")
    if magic != IDX_IMAGE_MAGIC:
        raise DataFormatError(f"{images_path}: bad magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}")
    n = _read_u32_be(ibuf, 4, images_path, "count")
    h = _read_u32_be(ibuf, 8, images_path, "rows")
    w = _read_u32_be(ibuf, 12, images_path, "cols")
    if len(ibuf) != 16 + n * h * w:
        raise DataFormatError(
            f"{images_path}: payload is {len(ibuf) - 16} bytes, header promises {n * h * w}"
        )

    magic = _read_u32_be(lbuf, 0, labels_path, "magic")
    if magic != IDX_LABEL_MAGIC:
        raise DataFormatError(f"{labels_path}: bad magic 0x{magic:08x}, expected 0x{IDX_LABEL_MAGIC:08x}")
    n_labels = _read_u32_be(lbuf, 4, labels_path, "count")
    if len(lbuf) != 8 + n_labels:
        raise DataFormatError(
            f"{labels_path}: payload is {len(lbuf) - 8} bytes, header promises {n_labels}"
        )
    if n != n_labels:
        raise DataFormatError(f"image count {n} does not match label count {n_labels}")

    pixels = np.frombuffer(ibuf, dtype=np.uint8, offset=16).reshape(n, 1, h, w)
    labels = np.frombuffer(lbuf, dtype=np.uint8, offset=8).astype(np.int64)
    return Dataset(pixels.astype(np.float32) / _SCALE, labels)


def serialize_idx(dataset):
    """Dataset -> (image file bytes, label file bytes); inverse of load_idx."""
    n, c, h, w = dataset.images.shape
    if c != 1:
        raise DataFormatError(f"IDX serialization expects 1 channel, got {c}")
    pixels = np.rint(dataset.images.astype(np.float64) * 255.0).astype(np.uint8)
    ibuf = struct.pack(">IIII", IDX_IMAGE_MAGIC, n, h, w) + pixels.tobytes()
    lbuf = struct.pack(">II", IDX_LABEL_MAGIC, n) + dataset.labels.astype(np.uint8).tobytes()
    return ibuf, lbuf


def load_cifar_binary(paths):
    """Parse one or more CIFAR-10 binary batch files into a Dataset."""
    if isinstance(paths, (str, bytes)) or not hasattr(paths, "__iter__"):
        paths = [paths]
    chunks = []
    labels = []
    for path in paths:
        with open(path, "rb") as f:
            buf = f.read()
        if len(buf) == 0 or len(buf) % CIFAR_RECORD_BYTES != 0:
            raise DataFormatError(
                f"{path}: length {len(buf)} is not a positive multiple of {CIFAR_RECORD_BYTES}"
            )
        records = np.frombuffer(buf, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        batch_labels = records[:, 0]
        bad = batch_labels >= 10
        if bad.any():
            raise DataFormatError(
                f"{path}: label byte {int(batch_labels[bad.argmax()])} out of range at record {int(bad.argmax())}"
            )
        chunks.append(records[:, 1:].reshape(-1, 3, 32, 32))
        labels.append(batch_labels.astype(np.int64))
    pixels = np.concatenate(chunks, axis=0)
    return Dataset(pixels.astype(np.float32) / _SCALE, np.concatenate(labels))


def serialize_cifar_binary(dataset):
    """Dataset -> single CIFAR-10 binary batch; inverse of load_cifar_binary."""
    n, c, h, w = dataset.images.shape
    if (c, h, w) != (3, 32, 32):
        raise DataFormatError(f"CIFAR serialization expects [n, 3, 32, 32], got {dataset.images.shape}")
    pixels = np.rint(dataset.images.astype(np.float64) * 255.0).astype(np.uint8).reshape(n, 3072)
    records = np.concatenate([dataset.labels.astype(np.uint8)[:, None], pixels], axis=1)
    return records.tobytes()


def subsample(train, test, n_train, n_test, seed):
    """Draw the experiment's train/test subsets once, in served order.

    Uniform without replacement from each split (train indices from the
    train split, test from the test split, so the two are disjoint by
    construction). The drawn order is the batch order: it is fixed by the
    seed and identical for every model evaluated against it.
    """
    if n_train > len(train):
        raise ValueError(f"requested {n_train} train samples, split has {len(train)}")
    if n_test > len(test):
        raise ValueError(f"requested {n_test} test samples, split has {len(test)}")
    rng = master_rng(seed)
    train_idx = rng.choice(len(train), size=n_train, replace=False)
    test_idx = rng.choice(len(test), size=n_test, replace=False)
    return train.take(train_idx), test.take(test_idx)


def iter_batches(dataset, batch_size):
    """Yield (images, labels) in stored order; the final batch may be short."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    for start in range(0, len(dataset), batch_size):
        stop = start + batch_size
        yield dataset.images[start:stop], dataset.labels[start:stop]
