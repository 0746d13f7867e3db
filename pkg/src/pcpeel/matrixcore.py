"""Dense-matrix primitives: sample covariance, symmetric eigendecomposition,
projection onto an eigenbasis.

All values are immutable after construction and all operations are pure,
so everything here is safe to share across threads.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFinite, NotSymmetric, TooFewSamples

logger = logging.getLogger(__name__)

# Relative tolerance below which a negative eigenvalue is treated as
# round-off and clamped to zero.
EIGENVALUE_CLAMP_RTOL = 1e-10


def _as_readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DataMatrix:
    """An n-by-d observation matrix; rows are samples, columns are features.

    Attributes:
        values: float64 array of shape (n, d), read-only.
        column_names: optional feature names carried through to reports.
    """

    values: np.ndarray
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=np.float64))
        if values.ndim != 2:
            raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
        if values.shape[1] < 1:
            raise ValueError("a data matrix needs at least one column")
        if not np.all(np.isfinite(values)):
            raise NonFinite("data matrix contains NaN or infinite entries")
        if self.column_names is not None and len(self.column_names) != values.shape[1]:
            raise DimensionMismatch(
                f"{len(self.column_names)} column names for {values.shape[1]} columns"
            )
        object.__setattr__(self, "values", _as_readonly(values))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def rows(self, index: np.ndarray) -> "DataMatrix":
        """Row-subset view as a new matrix (selection by integer index or mask)."""
        return DataMatrix(self.values[index], self.column_names)


@dataclass(frozen=True)
class CovMatrix:
    """A d-by-d symmetric covariance matrix."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValueError(f"covariance must be square, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFinite("covariance contains NaN or infinite entries")
        scale = max(1.0, float(np.max(np.abs(values))))
        asym = float(np.max(np.abs(values - values.T)))
        if asym > 1e-12 * scale:
            raise NotSymmetric(f"max asymmetry {asym:.3e} exceeds {1e-12 * scale:.3e}")
        if np.any(np.diag(values) < -1e-12 * scale):
            raise ValueError("covariance diagonal has a negative entry")
        # exact symmetry downstream
        values = 0.5 * (values + values.T)
        object.__setattr__(self, "values", _as_readonly(values))

    @property
    def d(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class EigenBasis:
    """Eigenvalues in non-increasing order with the matching orthonormal
    eigenvector matrix (columns are eigenvectors).

    Attributes:
        eigenvalues: nonnegative, sorted non-increasing. Negative round-off
            within EIGENVALUE_CLAMP_RTOL * lambda_1 is clamped to zero.
        vectors: d-by-d orthonormal matrix, column j pairs with eigenvalue j.
        clamped: total magnitude clamped away; surfaced in reports.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    clamped: float = field(default=0.0)

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=np.float64).ravel()
        vecs = np.asarray(self.vectors, dtype=np.float64)
        d = vals.size
        if vecs.shape != (d, d):
            raise DimensionMismatch(f"{d} eigenvalues but vectors of shape {vecs.shape}")
        if np.any(np.diff(vals) > 0):
            raise ValueError("eigenvalues must be sorted non-increasing")
        top = float(vals[0]) if d else 0.0
        floor = -EIGENVALUE_CLAMP_RTOL * max(top, 0.0)
        if np.any(vals < floor):
            raise ValueError(
                f"eigenvalue {float(vals.min()):.3e} is too negative to be round-off"
            )
        clamp_total = float(-vals[vals < 0].sum())
        if clamp_total > 0:
            vals = np.where(vals < 0, 0.0, vals)
            logger.info("clamped %.3e of negative eigenvalue mass to zero", clamp_total)
        gram_err = float(np.max(np.abs(vecs.T @ vecs - np.eye(d))))
        if gram_err > 1e-10:
            raise ValueError(f"eigenvectors not orthonormal: max |V'V - I| = {gram_err:.3e}")
        object.__setattr__(self, "eigenvalues", _as_readonly(vals))
        object.__setattr__(self, "vectors", _as_readonly(vecs))
        object.__setattr__(self, "clamped", float(self.clamped) + clamp_total)

    @property
    def d(self) -> int:
        return self.eigenvalues.size


def sample_covariance(x: DataMatrix) -> CovMatrix:
    """Unbiased sample covariance: columns centered by their means,
    cross-products divided by n - 1.
    """
    if x.n < 2:
        raise TooFewSamples(f"covariance needs at least 2 rows, got {x.n}")
    centered = x.values - x.values.mean(axis=0)
    c = centered.T @ centered / (x.n - 1)
    return CovMatrix(0.5 * (c + c.T))


def eigendecompose(c: CovMatrix) -> EigenBasis:
    """Symmetric eigendecomposition with eigenvalues sorted non-increasing.

    Sign convention: each eigenvector is flipped so its largest-magnitude
    entry is positive, making output comparable across runs and platforms.
    Ties in degenerate spectra keep the decomposition routine's order.
    """
    vals, vecs = np.linalg.eigh(c.values)
    order = np.arange(vals.size)[::-1]  # eigh returns ascending; stable reversal
    vals = vals[order]
    vecs = vecs[:, order]
    for j in range(vecs.shape[1]):
        pivot = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[pivot, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return EigenBasis(vals, vecs)


def project(x: DataMatrix, basis: EigenBasis) -> DataMatrix:
    """Rotate rows into the eigenbasis: row i maps to V' (row_i - column means).

    Output column j then has sample variance approximately eigenvalue j.
    """
    if x.d != basis.d:
        raise DimensionMismatch(f"data has {x.d} columns, basis expects {basis.d}")
    centered = x.values - x.values.mean(axis=0)
    return DataMatrix(centered @ basis.vectors)
