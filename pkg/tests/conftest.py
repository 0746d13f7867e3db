"""Shared fixtures: seeded streams and a synthetic labeled IDX dataset."""

import gzip
import struct
from pathlib import Path

import numpy as np
import pytest

from pcpeel.rng import RngStream


@pytest.fixture
def stream():
    return RngStream(20250810)


def _orthogonal(d: int, gen: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(gen.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def make_structured_classes(
    n_per_class=400,
    side=8,
    strong=(400.0, 150.0, 80.0),
    middling=(30.0, 24.0, 18.0),
    floor=1e-6,
    seed=7,
):
    """Three image classes with a planted spectrum: a few strong components,
    a middling band, then a flat floor. Pixel quantization adds roughly 1/12
    variance everywhere, so the middling band must sit well above that for
    the spectral gap to stay at the end of the band (index 6)."""
    d = side * side
    gen = np.random.default_rng(seed)
    rot = _orthogonal(d, gen)
    variances = np.concatenate(
        [np.asarray(strong), np.asarray(middling), np.full(d - len(strong) - len(middling), floor)]
    )
    images = []
    labels = []
    for cls in range(3):
        z = gen.standard_normal((n_per_class, d)) * np.sqrt(variances)
        x = z @ rot.T
        x += 25.0 * cls  # distinct class means
        x = np.clip(x + 100.0, 0.0, 255.0)
        images.append(x)
        labels.extend([cls] * n_per_class)
    return np.vstack(images), np.asarray(labels, dtype=np.int64), side


def idx_image_bytes(images: np.ndarray, side: int) -> bytes:
    n = images.shape[0]
    header = struct.pack(">IIII", 0x00000803, n, side, side)
    return header + np.asarray(np.rint(images), dtype=np.uint8).tobytes()


def idx_label_bytes(labels: np.ndarray) -> bytes:
    return struct.pack(">II", 0x00000801, len(labels)) + bytes(int(v) for v in labels)


@pytest.fixture(scope="session")
def synthetic_idx_dir(tmp_path_factory) -> Path:
    """Gzipped IDX pair with the planted-spectrum classes."""
    images, labels, side = make_structured_classes()
    root = tmp_path_factory.mktemp("idx")
    (root / "images-idx3-ubyte.gz").write_bytes(gzip.compress(idx_image_bytes(images, side)))
    (root / "labels-idx1-ubyte.gz").write_bytes(gzip.compress(idx_label_bytes(labels)))
    return root
