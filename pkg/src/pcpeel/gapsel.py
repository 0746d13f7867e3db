"""Selection of the pettiest component band.

The informative low-variance band is located by the largest drop between
consecutive log-scale eigenvalues; the naive alternative of taking the raw
spectrum tail is kept as a baseline because it tends to land in the flat
noise floor and wash out the variance contrast.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSpectrum
from .matrixcore import EigenBasis

# Eigenvalues below this fraction of the top eigenvalue count as numerical
# floor: their logs are meaningless and no band may be anchored there.
SPECTRUM_FLOOR_RTOL = 1e-12


@dataclass(frozen=True)
class GapSelection:
    """A chosen pettiest band plus the leading band it is contrasted with.

    `gap_index` is the 1-based position j of the largest drop
    log lambda_j - log lambda_{j+1}; the pettiest band is the k components
    ending at j. For the naive tail baseline the gap fields are None.
    """

    pettiest_band: tuple[int, ...]
    principal_band: tuple[int, ...]
    k: int
    method: str  # "gap" or "tail"
    gap_index: int | None = None
    gap_size: float | None = None  # drop in log10 units


def _floor_count(eigenvalues: np.ndarray) -> int:
    """Number of leading eigenvalues above the numerical floor."""
    top = float(eigenvalues[0]) if eigenvalues.size else 0.0
    return int(np.sum(eigenvalues > SPECTRUM_FLOOR_RTOL * top))


def log_spectral_gap(basis: EigenBasis, k: int) -> GapSelection:
    """Locate the band of k components ending at the largest log-scale drop.

    Admissible gap positions j satisfy k <= j <= d-1 and lambda_j above the
    numerical floor, so the band always fits and never dips into clamped
    zeros. Ties break to the smallest j (the earliest structural break).

    Raises DegenerateSpectrum when fewer than k+1 eigenvalues sit above the
    floor or every admissible gap is exactly zero.
    """
    if k < 1:
        raise ValueError(f"band width k must be >= 1, got {k}")
    lam = basis.eigenvalues
    d = lam.size
    above = _floor_count(lam)
    if above < k + 1:
        raise DegenerateSpectrum(
            f"need at least {k + 1} eigenvalues above the floor, found {above}"
        )

    best_j = None
    best_gap = -math.inf
    for j in range(k, min(above, d - 1) + 1):  # 1-based positions with lambda_j above floor
        lo = lam[j]  # lambda_{j+1}
        hi = lam[j - 1]  # lambda_j
        # ratio form keeps mathematically equal gaps exactly tied in floats
        gap = math.inf if lo <= 0.0 else math.log10(hi / lo)
        if gap > best_gap:
            best_gap = gap
            best_j = j
    if best_j is None or best_gap <= 0.0:
        raise DegenerateSpectrum("all admissible log-spectral gaps are zero")

    return GapSelection(
        pettiest_band=tuple(range(best_j - k + 1, best_j + 1)),
        principal_band=tuple(range(1, k + 1)),
        k=k,
        method="gap",
        gap_index=best_j,
        gap_size=best_gap,
    )


def naive_tail(basis: EigenBasis, k: int) -> GapSelection:
    """Baseline band: the last k components of the raw spectrum, regardless
    of where in the eigenvalue range they fall."""
    d = basis.d
    if not 1 <= k <= d:
        raise ValueError(f"k must be in 1..{d}, got {k}")
    return GapSelection(
        pettiest_band=tuple(range(d - k + 1, d + 1)),
        principal_band=tuple(range(1, k + 1)),
        k=k,
        method="tail",
    )


@dataclass(frozen=True)
class ScreeTable:
    """Per-component rows backing a scree plot: index, eigenvalue, its
    log10 (the string "-inf" for clamped zeros), and a band tag."""

    indices: tuple[int, ...]
    eigenvalues: tuple[float, ...]
    bands: tuple[str, ...]

    CSV_HEADER = "index,eigenvalue,log10_eigenvalue,band"

    def log10_column(self) -> tuple[str, ...]:
        return tuple(
            "-inf" if lam <= 0.0 else repr(math.log10(lam)) for lam in self.eigenvalues
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self.CSV_HEADER + "\n")
        for idx, lam, logs, band in zip(
            self.indices, self.eigenvalues, self.log10_column(), self.bands
        ):
            buf.write(f"{idx},{lam!r},{logs},{band}\n")
        return buf.getvalue()


def scree_export(
    basis: EigenBasis,
    selection: GapSelection | None = None,
    naive: GapSelection | None = None,
) -> ScreeTable:
    """Tabulate the spectrum with band tags for plot emission.

    Tag priority on overlap: pettiest, then principal, then naive. The
    `naive` argument lets a tail baseline ride along in the same table.
    """
    lam = basis.eigenvalues
    tags = ["none"] * lam.size

    def _tag(indices, name):
        for i in indices:
            if tags[i - 1] == "none":
                tags[i - 1] = name

    if selection is not None:
        _tag(selection.pettiest_band, "pettiest" if selection.method == "gap" else "naive")
        _tag(selection.principal_band, "principal")
    if naive is not None:
        _tag(naive.pettiest_band, "naive")
    return ScreeTable(
        indices=tuple(range(1, lam.size + 1)),
        eigenvalues=tuple(float(v) for v in lam),
        bands=tuple(tags),
    )
