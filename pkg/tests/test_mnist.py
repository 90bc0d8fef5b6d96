import gzip
import struct
import tempfile
import unittest
from pathlib import Path

import numpy as np

from quasinit.errors import BadMagic, DatasetMissing, LabelOutOfRange, ShapeOverflow, TruncatedFile
from quasinit.mnist import load_mnist, MNIST_FILES, parse_idx, prepare, RawMnist


def idx_bytes(array: np.ndarray) -> bytes:
    array = np.asarray(array, dtype=np.uint8)
    header = struct.pack('>I', 0x0800 | array.ndim)
    header += struct.pack(f'>{array.ndim}I', *array.shape)
    return header + array.tobytes()


def write_mnist(directory: Path, *, n_train=6, n_test=4, compress=False, labels=None):
    rng = np.random.default_rng(0)
    arrays = {
        'train_images': rng.integers(0, 256, size=(n_train, 28, 28)),
        'train_labels': labels if labels is not None else np.arange(n_train) % 10,
        'test_images': rng.integers(0, 256, size=(n_test, 28, 28)),
        'test_labels': np.arange(n_test) % 10,
    }
    for key, name in MNIST_FILES.items():
        data = idx_bytes(arrays[key])
        if compress:
            (directory / f"{name}.gz").write_bytes(gzip.compress(data))
        else:
            (directory / name).write_bytes(data)
    return arrays


class TestParseIdx(unittest.TestCase):

    def test_images_and_labels(self):
        images = np.arange(2 * 3 * 4).reshape(2, 3, 4)
        np.testing.assert_array_equal(parse_idx(idx_bytes(images)), images)
        labels = np.array([3, 1, 4])
        out = parse_idx(idx_bytes(labels))
        self.assertEqual(out.dtype, np.uint8)
        self.assertEqual(out.tolist(), [3, 1, 4])

    def test_bad_magic(self):
        data = bytearray(idx_bytes(np.zeros(3)))
        data[2] = 0x0D
        with self.assertRaises(BadMagic):
            parse_idx(bytes(data))
        with self.assertRaises(BadMagic):
            parse_idx(struct.pack('>II', 0x00000802, 0) + b'')

    def test_truncated(self):
        data = idx_bytes(np.zeros((2, 5)))
        for cut in (2, 7, len(data) - 1):
            with self.subTest(cut=cut), self.assertRaises(TruncatedFile):
                parse_idx(data[:cut])

    def test_trailing_bytes(self):
        with self.assertRaises(ShapeOverflow):
            parse_idx(idx_bytes(np.zeros(4)) + b'\x00')

    def test_oversized_shape(self):
        header = struct.pack('>IIII', 0x00000803, 60000, 60000, 60000)
        with self.assertRaises(ShapeOverflow):
            parse_idx(header)


class TestPrepare(unittest.TestCase):

    def test_scaling_and_one_hot(self):
        raw = RawMnist(
            np.array([[[0, 255], [51, 102]]], dtype=np.uint8),
            np.array([7], dtype=np.uint8),
            np.zeros((1, 2, 2), dtype=np.uint8),
            np.array([0], dtype=np.uint8),
        )
        data = prepare(raw)
        self.assertEqual(data.train_x.dtype, np.float32)
        np.testing.assert_allclose(data.train_x, [[0.0, 1.0, 0.2, 0.4]], rtol=1e-6)
        self.assertEqual(data.train_y.shape, (1, 10))
        self.assertEqual(int(np.argmax(data.train_y[0])), 7)
        self.assertEqual(data.train_y.sum(), 1.0)

    def test_label_out_of_range(self):
        raw = RawMnist(
            np.zeros((1, 2, 2), dtype=np.uint8),
            np.array([10], dtype=np.uint8),
            np.zeros((1, 2, 2), dtype=np.uint8),
            np.array([0], dtype=np.uint8),
        )
        with self.assertRaises(LabelOutOfRange):
            prepare(raw)

    def test_count_mismatch(self):
        raw = RawMnist(
            np.zeros((2, 2, 2), dtype=np.uint8),
            np.array([1], dtype=np.uint8),
            np.zeros((1, 2, 2), dtype=np.uint8),
            np.array([0], dtype=np.uint8),
        )
        with self.assertRaises(ValueError):
            prepare(raw)


class TestLoadMnist(unittest.TestCase):

    def test_plain_and_gzip(self):
        for compress in (False, True):
            with self.subTest(compress=compress), tempfile.TemporaryDirectory() as tmp:
                arrays = write_mnist(Path(tmp), compress=compress)
                data = load_mnist(tmp)
                self.assertEqual(data.train_x.shape, (6, 784))
                self.assertEqual(data.test_y.shape, (4, 10))
                np.testing.assert_allclose(
                    data.test_x[1] * 255, arrays['test_images'][1].ravel(), atol=1e-3
                )
                self.assertEqual(np.argmax(data.train_y, axis=1).tolist(), [0, 1, 2, 3, 4, 5])

    def test_missing_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_mnist(Path(tmp))
            (Path(tmp) / MNIST_FILES['test_labels']).unlink()
            with self.assertRaises(DatasetMissing):
                load_mnist(tmp)
            with self.assertRaises(FileNotFoundError):
                load_mnist(Path(tmp) / 'nowhere')

    def test_file_overrides(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_mnist(Path(tmp))
            src = Path(tmp) / MNIST_FILES['train_labels']
            src.rename(Path(tmp) / 'labels.idx')
            data = load_mnist(tmp, train_labels='labels.idx')
            self.assertEqual(len(data.train_y), 6)
            with self.assertRaises(TypeError):
                load_mnist(tmp, validation='x')

    def test_corrupt_file_names_path(self):
        with tempfile.TemporaryDirectory() as tmp:
            write_mnist(Path(tmp))
            (Path(tmp) / MNIST_FILES['train_images']).write_bytes(b'\x00\x00\x08\x03\x00')
            with self.assertRaises(TruncatedFile) as ctx:
                load_mnist(tmp)
            self.assertTrue(any('train-images' in note for note in ctx.exception.__notes__))


if __name__ == '__main__':
    unittest.main()
