"""MNIST in the IDX container.

Header: two zero bytes, a type code (0x08 for unsigned bytes), the number of
dimensions, then one big-endian uint32 per dimension, then the payload.
"""

__all__ = [
    'Dataset',
    'load_mnist',
    'MNIST_FILES',
    'parse_idx',
    'prepare',
    'RawMnist',
    'read_idx',
    'Split',
]

import gzip
import logging
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import BadMagic, DatasetMissing, LabelOutOfRange, ShapeOverflow, TruncatedFile

logger = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801
MAX_ELEMENTS = 2**31 - 1
N_CLASSES = 10

MNIST_FILES = {
    'train_images': 'train-images-idx3-ubyte',
    'train_labels': 'train-labels-idx1-ubyte',
    'test_images': 't10k-images-idx3-ubyte',
    'test_labels': 't10k-labels-idx1-ubyte',
}


class Split(NamedTuple):
    x: np.ndarray
    y: np.ndarray


class RawMnist(NamedTuple):
    train_images: np.ndarray
    train_labels: np.ndarray
    test_images: np.ndarray
    test_labels: np.ndarray


@dataclass(frozen=True)
class Dataset:
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray

    @property
    def train(self) -> Split:
        return Split(self.train_x, self.train_y)

    @property
    def test(self) -> Split:
        return Split(self.test_x, self.test_y)


def parse_idx(data: bytes) -> np.ndarray:
    """Decode an IDX image (magic 0x803) or label (magic 0x801) file.

    Raises
    ------
    BadMagic
        For any other magic number.
    TruncatedFile
        If the header or payload is shorter than declared.
    ShapeOverflow
        If the declared shape is too large or does not account for every byte.
    """
    if len(data) < 4:
        raise TruncatedFile(f"expected a 4-byte magic number, got {len(data)} bytes")
    (magic,) = struct.unpack('>I', data[:4])
    if magic not in (IMAGES_MAGIC, LABELS_MAGIC):
        raise BadMagic(
            f"expected magic 0x{IMAGES_MAGIC:08x} or 0x{LABELS_MAGIC:08x}, "
            f"got 0x{magic:08x} instead"
        )
    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(data) < header_len:
        raise TruncatedFile(f"header declares {ndim} dimensions but the file ends early")
    shape = struct.unpack(f'>{ndim}I', data[4:header_len])
    count = 1
    for d in shape:
        count *= d
    if count > MAX_ELEMENTS:
        raise ShapeOverflow(f"shape {shape} has more than {MAX_ELEMENTS} elements")
    payload = len(data) - header_len
    if payload < count:
        raise TruncatedFile(f"shape {shape} needs {count} bytes, file has {payload}")
    if payload > count:
        raise ShapeOverflow(f"shape {shape} covers {count} bytes, file has {payload}")
    return np.frombuffer(data, dtype=np.uint8, offset=header_len).reshape(shape)


def read_idx(path: str | os.PathLike) -> np.ndarray:
    path = Path(path)
    opener = gzip.open if path.suffix == '.gz' else open
    with opener(path, 'rb') as f:
        data = f.read()
    try:
        return parse_idx(data)
    except ValueError as err:
        err.add_note(f"{str(path)!r}")
        raise


def prepare(raw: RawMnist) -> Dataset:
    """Flatten images, scale pixels by 1/255 and one-hot encode labels.

    Sample order is kept; there is no shuffling and no validation split.
    """

    def features(images):
        return images.reshape(len(images), -1).astype(np.float32) / np.float32(255.0)

    def one_hot(labels):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= N_CLASSES):
            bad = labels[(labels < 0) | (labels >= N_CLASSES)][0]
            raise LabelOutOfRange(f"expected labels in [0, 9], got {bad} instead")
        out = np.zeros((len(labels), N_CLASSES), dtype=np.float32)
        out[np.arange(len(labels)), labels] = 1.0
        return out

    for images, labels in ((raw.train_images, raw.train_labels), (raw.test_images, raw.test_labels)):
        if len(images) != len(labels):
            raise ValueError(
                f"expected one label per image, got {len(images)} images "
                f"and {len(labels)} labels instead"
            )
    return Dataset(
        features(raw.train_images),
        one_hot(raw.train_labels),
        features(raw.test_images),
        one_hot(raw.test_labels),
    )


def _locate(data_dir: Path, name: str) -> Path:
    for candidate in (data_dir / name, data_dir / f"{name}.gz"):
        if candidate.exists():
            return candidate
    raise DatasetMissing(f"{name} (or {name}.gz) not found in {str(data_dir)!r}")


def load_mnist(data_dir: str | os.PathLike, **overrides: str) -> Dataset:
    """Load the four standard MNIST files from ``data_dir``.

    ``overrides`` replaces file names by key (``train_images``, ``train_labels``,
    ``test_images``, ``test_labels``).
    """
    data_dir = Path(data_dir)
    if unknown := overrides.keys() - MNIST_FILES.keys():
        raise TypeError(f"unexpected file keys: {sorted(unknown)}")
    names = MNIST_FILES | {k: v for k, v in overrides.items() if v}
    raw = RawMnist(**{k: read_idx(_locate(data_dir, v)) for k, v in names.items()})
    dataset = prepare(raw)
    logger.info(
        "loaded MNIST from %s: %d train, %d test",
        data_dir,
        len(dataset.train_x),
        len(dataset.test_x),
    )
    return dataset
