"""Readers for IDX image/label binaries and numeric CSV matrices.

IDX is the big-endian format the published Fashion-MNIST files use:
a 4-byte magic (0x00000803 for images, 0x00000801 for labels), big-endian
32-bit counts, then raw unsigned bytes. Gzipped files are accepted
transparently. Pixels stay on the raw 0..255 scale; no normalization.
"""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    LabelOutOfRange,
    NonNumericCell,
    RaggedRows,
    TrailingGarbage,
    TruncatedPayload,
    UnknownLabel,
)
from .matrixcore import DataMatrix

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

FASHION_MNIST_CLASSES = {
    0: "T-shirt/top",
    1: "Trouser",
    2: "Pullover",
    3: "Dress",
    4: "Coat",
    5: "Sandal",
    6: "Shirt",
    7: "Sneaker",
    8: "Bag",
    9: "Ankle boot",
}


def _maybe_gunzip(data: bytes) -> bytes:
    if data[:2] == b"\x1f\x8b":
        return gzip.decompress(data)
    return data


def read_idx_images(data: bytes) -> DataMatrix:
    """Parse an IDX image record into an n-by-(rows*cols) matrix of reals."""
    data = _maybe_gunzip(data)
    if len(data) < 16:
        raise TruncatedPayload(f"image header needs 16 bytes, got {len(data)}")
    magic = int.from_bytes(data[:4], "big")
    if magic != IMAGE_MAGIC:
        raise BadMagic(f"expected image magic {IMAGE_MAGIC:#010x}, got {magic:#010x}")
    n, rows, cols = struct.unpack(">III", data[4:16])
    if rows * cols == 0:
        raise ValueError(f"degenerate image geometry {rows}x{cols}")
    expected = n * rows * cols
    actual = len(data) - 16
    if actual < expected:
        raise TruncatedPayload(f"expected {expected} payload bytes, got {actual}")
    if actual > expected:
        raise TrailingGarbage(f"{actual - expected} bytes after the declared payload")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=16)
    return DataMatrix(pixels.reshape(n, rows * cols).astype(np.float64))


def read_idx_labels(data: bytes) -> np.ndarray:
    """Parse an IDX label record into an integer vector with values 0..9."""
    data = _maybe_gunzip(data)
    if len(data) < 8:
        raise TruncatedPayload(f"label header needs 8 bytes, got {len(data)}")
    magic = int.from_bytes(data[:4], "big")
    if magic != LABEL_MAGIC:
        raise BadMagic(f"expected label magic {LABEL_MAGIC:#010x}, got {magic:#010x}")
    (n,) = struct.unpack(">I", data[4:8])
    actual = len(data) - 8
    if actual < n:
        raise TruncatedPayload(f"expected {n} payload bytes, got {actual}")
    if actual > n:
        raise TrailingGarbage(f"{actual - n} bytes after the declared payload")
    labels = np.frombuffer(data, dtype=np.uint8, offset=8)
    if labels.size and labels.max() > 9:
        bad = int(labels.max())
        raise LabelOutOfRange(f"label byte {bad} outside 0..9")
    return labels.astype(np.int64)


@dataclass(frozen=True)
class LabeledDataset:
    """Images with class labels; pixel intensities 0..255 as reals."""

    images: DataMatrix
    labels: np.ndarray
    class_names: dict[int, str]

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if labels.size != self.images.n:
            raise ValueError(
                f"{self.images.n} images but {labels.size} labels"
            )
        if labels.size and not (labels.min() >= 0 and labels.max() <= 9):
            raise LabelOutOfRange("labels must lie in 0..9")
        vals = self.images.values
        if vals.size and (vals.min() < 0.0 or vals.max() > 255.0):
            raise ValueError("pixel intensities must lie in [0, 255]")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)


def load_labeled_dataset(
    images_path: str | Path,
    labels_path: str | Path,
    class_names: dict[int, str] | None = None,
) -> LabeledDataset:
    images = read_idx_images(Path(images_path).read_bytes())
    labels = read_idx_labels(Path(labels_path).read_bytes())
    return LabeledDataset(images, labels, class_names or dict(FASHION_MNIST_CLASSES))


def split_by_label(ds: LabeledDataset, label: int) -> DataMatrix:
    """Rows of one class, in original order."""
    mask = ds.labels == int(label)
    if not np.any(mask):
        raise UnknownLabel(f"no rows carry label {label}")
    return ds.images.rows(mask)


def read_csv_matrix(path: str | Path, header: str | bool = "auto") -> DataMatrix:
    """Rectangular numeric CSV into a DataMatrix.

    header="auto" treats the first row as names when any of its cells
    fails to parse as a number; header=True/False forces either way.
    """
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    width = len(rows[0])
    for line_no, row in enumerate(rows, start=1):
        if len(row) != width:
            raise RaggedRows(
                f"{path}: line {line_no} has {len(row)} cells, expected {width}"
            )

    def parse_row(row, line_no):
        out = []
        for col_no, cell in enumerate(row, start=1):
            try:
                out.append(float(cell))
            except ValueError:
                raise NonNumericCell(
                    f"{path}: line {line_no}, column {col_no}: {cell!r}"
                ) from None
        return out

    names: tuple[str, ...] | None = None
    start = 0
    if header is True:
        names = tuple(rows[0])
        start = 1
    elif header == "auto":
        try:
            [float(c) for c in rows[0]]
        except ValueError:
            names = tuple(rows[0])
            start = 1
    data = [parse_row(row, line_no) for line_no, row in enumerate(rows[start:], start=start + 1)]
    if not data:
        raise ValueError(f"{path}: no data rows below the header")
    return DataMatrix(np.asarray(data, dtype=np.float64), column_names=names)


def write_csv_matrix(x: DataMatrix, path: str | Path) -> None:
    """Write with 17 significant digits so a read round-trips exactly."""
    with open(path, "w", newline="\n") as fh:
        if x.column_names is not None:
            fh.write(",".join(x.column_names) + "\n")
        for row in x.values:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
