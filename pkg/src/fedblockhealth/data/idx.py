"""IDX binary format (the MNIST/EMNIST distribution format).

Header: u32 big-endian magic (0x00000803 for 3-D unsigned-byte images,
0x00000801 for 1-D labels), then one u32 big-endian size per dimension,
then the raw unsigned bytes.
"""
from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .dataset import Dataset

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _read(path) -> bytes:
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def parse_idx_images(data: bytes) -> np.ndarray:
    if len(data) < 16:
        raise FormatError("images header: truncated")
    magic, n, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IMAGES_MAGIC:
        raise FormatError(f"images magic: expected 0x{IMAGES_MAGIC:08x}, got 0x{magic:08x}")
    if (rows, cols) != (28, 28):
        raise FormatError(f"images dimensions: expected 28x28, got {rows}x{cols}")
    if len(data) - 16 != n * rows * cols:
        raise FormatError(f"images count: header says {n} images, payload holds {(len(data) - 16) / (rows * cols):g}")
    return np.frombuffer(data, dtype=np.uint8, offset=16).reshape(n, rows, cols)


def parse_idx_labels(data: bytes) -> np.ndarray:
    if len(data) < 8:
        raise FormatError("labels header: truncated")
    magic, n = struct.unpack(">II", data[:8])
    if magic != LABELS_MAGIC:
        raise FormatError(f"labels magic: expected 0x{LABELS_MAGIC:08x}, got 0x{magic:08x}")
    if len(data) - 8 != n:
        raise FormatError(f"labels count: header says {n} labels, payload holds {len(data) - 8}")
    return np.frombuffer(data, dtype=np.uint8, offset=8)


def load_idx(images_path, labels_path) -> Dataset:
    raw = parse_idx_images(_read(images_path))
    labels = parse_idx_labels(_read(labels_path))
    if len(raw) != len(labels):
        raise FormatError(f"count: {len(raw)} images but {len(labels)} labels")
    if labels.size and labels.max() > 9:
        raise FormatError(f"labels: value {int(labels.max())} outside the digit classes")
    return Dataset(raw.astype(np.float64) / 255.0, labels.astype(np.int64))


def dumps_idx(dataset: Dataset) -> tuple[bytes, bytes]:
    """Encode a dataset as (images, labels) IDX bytes; pixels are rounded to bytes."""
    n = len(dataset)
    pixels = np.rint(dataset.images * 255.0).astype(np.uint8)
    images = struct.pack(">IIII", IMAGES_MAGIC, n, 28, 28) + pixels.tobytes()
    labels = struct.pack(">II", LABELS_MAGIC, n) + dataset.labels.astype(np.uint8).tobytes()
    return images, labels


def write_idx(dataset: Dataset, images_path, labels_path) -> None:
    images, labels = dumps_idx(dataset)
    Path(images_path).write_bytes(images)
    Path(labels_path).write_bytes(labels)


def find_idx_pairs(directory) -> list[tuple[Path, Path]]:
    """(images, labels) file pairs in ``directory``, train split first.

    Matches the MNIST and EMNIST naming (``*-images-idx3-ubyte`` with a
    sibling ``*-labels-idx1-ubyte``), optionally gzipped.
    """
    directory = Path(directory)
    pairs = []
    for img in sorted(directory.iterdir()):
        name = img.name
        if "images-idx3-ubyte" not in name:
            continue
        lab = directory / name.replace("images-idx3-ubyte", "labels-idx1-ubyte")
        if lab.exists():
            pairs.append((img, lab))
    pairs.sort(key=lambda pr: (0 if "train" in pr[0].name else 1, pr[0].name))
    return pairs


def load_idx_dir(directory) -> Dataset:
    """Concatenate every IDX pair found in ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory {directory} does not exist")
    pairs = find_idx_pairs(directory)
    if not pairs:
        raise FileNotFoundError(f"no *-images-idx3-ubyte / *-labels-idx1-ubyte pair in {directory}")
    parts = [load_idx(i, l) for i, l in pairs]
    return Dataset(np.concatenate([p.images for p in parts]), np.concatenate([p.labels for p in parts]))
