"""Quantile boxes and peeling.

Two families live here. The single-step simultaneous peel (fastprim) cuts
alpha/2 = (1-beta)/(2k) of probability mass from each tail of k chosen
coordinates at once, in the principal-component basis. The classical
iterative peel/cover loop (prim_classic) removes one extremal quantile
slab at a time and then repeats on the complement to collect several
boxes.

Component indices in public APIs are 1-based (component 1 carries the
largest variance); retained row indices are 0-based positions into the
input matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import gapsel
from .errors import (
    DegenerateResponse,
    DimensionMismatch,
    EmptyColumn,
    EmptyRetention,
    NonPositiveFraction,
)
from .matrixcore import DataMatrix, EigenBasis

MODE_VOLUME = "volume"  # peel the pettiest band: smallest box, most variance kept
MODE_VARIANCE = "variance"  # peel the leading band: least variance kept
MODE_EXPLICIT = "explicit"  # caller names the component indices

_MODES = (MODE_VOLUME, MODE_VARIANCE, MODE_EXPLICIT)


def quantile(column: Sequence[float] | np.ndarray, p: float) -> float:
    """Type-7 quantile: linear interpolation of order statistics.

    On the sorted column, position h = (n-1)p + 1 and the result is
    x_floor(h) + (h - floor(h)) * (x_floor(h)+1 - x_floor(h)).
    """
    col = np.asarray(column, dtype=np.float64).ravel()
    if col.size == 0:
        raise EmptyColumn("quantile of an empty column")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"quantile level must be in [0, 1], got {p}")
    return float(np.quantile(col, p, method="linear"))


@dataclass(frozen=True)
class PeelSpec:
    """Which components to truncate and how much central mass to keep.

    Per-tail mass is alpha/2 = (1-beta)/(2k) for k truncated components,
    so the joint retained probability is at least beta under a union bound.
    """

    indices: tuple[int, ...]
    beta: float
    mode: str = MODE_EXPLICIT

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) == 0:
            raise ValueError("at least one component index is required")
        if len(set(idx)) != len(idx):
            raise ValueError(f"component indices must be distinct: {idx}")
        if min(idx) < 1:
            raise ValueError(f"component indices are 1-based: {idx}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must be in (0, 1], got {self.beta}")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        object.__setattr__(self, "indices", idx)

    @property
    def k(self) -> int:
        return len(self.indices)

    @property
    def tail_mass(self) -> float:
        """Probability mass peeled from each single tail: (1-beta)/(2k)."""
        return (1.0 - self.beta) / (2.0 * self.k)


@dataclass(frozen=True)
class IntervalBox:
    """Closed per-component intervals [lo_i, hi_i] for the truncated
    components, in projected-coordinate units."""

    indices: tuple[int, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64).ravel()
        hi = np.asarray(self.upper, dtype=np.float64).ravel()
        if lo.size != len(self.indices) or hi.size != len(self.indices):
            raise DimensionMismatch("bounds do not match the index set")
        if np.any(lo > hi):
            raise ValueError("interval lower bound exceeds upper bound")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def log_volume(self) -> float:
        """Natural log of the product of interval widths (-inf if any width is 0)."""
        widths = self.upper - self.lower
        if np.any(widths <= 0.0):
            return -math.inf
        return float(np.sum(np.log(widths)))

    def contains(self, values: np.ndarray) -> np.ndarray:
        """Boolean mask of rows satisfying every interval."""
        cols = np.asarray(values)[:, [i - 1 for i in self.indices]]
        return np.all((cols >= self.lower) & (cols <= self.upper), axis=1)


@dataclass(frozen=True)
class PeelResult:
    """Outcome of one peel: the box, who survived, and the box geometry."""

    box: IntervalBox
    retained_rows: np.ndarray  # 0-based row positions, ascending
    log_volume: float
    retained_fraction: float

    def __post_init__(self):
        rows = np.asarray(self.retained_rows, dtype=np.intp).ravel()
        rows.setflags(write=False)
        object.__setattr__(self, "retained_rows", rows)


def interquantile_box(y: DataMatrix, spec: PeelSpec) -> IntervalBox:
    """Central (1-alpha) inter-quantile interval per truncated component:
    [Q(alpha/2), Q(1 - alpha/2)] with alpha/2 = (1-beta)/(2k)."""
    if max(spec.indices) > y.d:
        raise DimensionMismatch(
            f"component index {max(spec.indices)} out of range for d={y.d}"
        )
    half = spec.tail_mass
    lower = np.empty(spec.k)
    upper = np.empty(spec.k)
    for pos, i in enumerate(spec.indices):
        col = y.values[:, i - 1]
        lower[pos] = quantile(col, half)
        upper[pos] = quantile(col, 1.0 - half)
    return IntervalBox(spec.indices, lower, upper)


def resolve_indices(
    d: int,
    k: int,
    mode: str,
    band: str = "gap",
    basis: EigenBasis | None = None,
    indices: Sequence[int] | None = None,
) -> tuple[int, ...]:
    """Turn a peel mode into concrete 1-based component indices.

    variance  -> the k leading components 1..k
    volume    -> the pettiest band: the spectral-gap band by default, the
                 raw spectrum tail d-k+1..d when band="tail"
    explicit  -> the caller's indices verbatim
    """
    if mode == MODE_EXPLICIT:
        if indices is None:
            raise ValueError("explicit mode requires component indices")
        return tuple(int(i) for i in indices)
    if not 1 <= k <= d:
        raise ValueError(f"k must be in 1..{d}, got {k}")
    if mode == MODE_VARIANCE:
        return tuple(range(1, k + 1))
    if mode == MODE_VOLUME:
        if band == "tail":
            return tuple(range(d - k + 1, d + 1))
        if band == "gap":
            if basis is None:
                raise ValueError("gap-band selection needs the eigenbasis")
            return gapsel.log_spectral_gap(basis, k).pettiest_band
        raise ValueError(f"band must be 'gap' or 'tail', got {band!r}")
    raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")


def fastprim(
    y: DataMatrix,
    basis: EigenBasis | None,
    k: int,
    beta: float,
    mode: str = MODE_VOLUME,
    band: str = "gap",
    indices: Sequence[int] | None = None,
) -> PeelResult:
    """Single simultaneous peel of k components of the rotated data.

    `y` must already be projected onto the eigenbasis with columns sorted
    by decreasing variance. The basis is only consulted to locate the
    spectral-gap band; the tail band and explicit indices need none.

    Raises EmptyRetention when fewer than d+1 rows survive, since the
    preserved covariance would be undefined downstream.
    """
    idx = resolve_indices(y.d, k, mode, band=band, basis=basis, indices=indices)
    spec = PeelSpec(indices=idx, beta=beta, mode=mode)
    box = interquantile_box(y, spec)
    mask = box.contains(y.values)
    kept = int(mask.sum())
    if kept < y.d + 1:
        raise EmptyRetention(
            f"only {kept} of {y.n} rows survived the peel; need at least {y.d + 1}"
        )
    return PeelResult(
        box=box,
        retained_rows=np.flatnonzero(mask),
        log_volume=box.log_volume,
        retained_fraction=kept / y.n,
    )


def active_information(
    retained_fraction: float, box_logvol: float, support_logvol: float
) -> float:
    """log of (empirical box probability / uniform-baseline box probability).

    The baseline is the uniform distribution over the empirical bounding
    box, so the result is log(retained_fraction) - (box_logvol -
    support_logvol). Positive values flag a local mode inside the box.
    """
    if not 0.0 < retained_fraction <= 1.0:
        raise NonPositiveFraction(
            f"retained fraction must be in (0, 1], got {retained_fraction}"
        )
    if not (math.isfinite(box_logvol) and math.isfinite(support_logvol)):
        raise ValueError("box and support log-volumes must be finite")
    return math.log(retained_fraction) - (box_logvol - support_logvol)


@dataclass(frozen=True)
class PrimConfig:
    """Tuning for the classical iterative peel/cover loop.

    alpha_peel is the per-step peel mass, beta_floor the smallest box
    support the peel loop may reach (measured against the rows each cover
    round starts from), max_covers the number of boxes collected.

    Every candidate slab holds probability alpha_peel of the current box.
    A named response removes the slab whose removal maximizes the response
    mean over the remainder. response=None is the unsupervised density
    surrogate: the slab spanning the widest fraction of its dimension wins,
    i.e. the most removed volume per unit of removed mass. Width is
    measured relative to the dimension's current box width, which makes
    the choice invariant to per-column rescaling.
    """

    alpha_peel: float
    beta_floor: float
    max_covers: int = 1
    response: str | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha_peel < 0.5:
            raise ValueError(f"alpha_peel must be in (0, 1/2), got {self.alpha_peel}")
        if not 0.0 < self.beta_floor < 1.0:
            raise ValueError(f"beta_floor must be in (0, 1), got {self.beta_floor}")
        if self.max_covers < 1:
            raise ValueError(f"max_covers must be >= 1, got {self.max_covers}")


def _box_log_volume(lower: np.ndarray, upper: np.ndarray, live: np.ndarray) -> float:
    widths = (upper - lower)[live]
    if widths.size == 0 or np.any(widths <= 0.0):
        return -math.inf
    return float(np.sum(np.log(widths)))


def prim_classic(x: DataMatrix, cfg: PrimConfig) -> list[PeelResult]:
    """Iterative peeling with covering on the complement.

    Each peel step scans the 2d extremal quantile slabs {x_j < Q_j(alpha)}
    and {x_j > Q_j(1-alpha)} of the current box and removes the one
    maximizing the target over the remainder; ties break to the lowest
    dimension index, lower tail before upper. Peeling stops before the box
    support (relative to the rows this cover round started from) would
    drop below beta_floor. Covering then repeats the whole loop on the
    complement, up to max_covers boxes.
    """
    values = x.values
    n_total = x.n
    if cfg.response is not None:
        if x.column_names is None or cfg.response not in x.column_names:
            raise ValueError(f"response column {cfg.response!r} not found")
        resp_col = x.column_names.index(cfg.response)
        response = values[:, resp_col]
        if np.ptp(response) == 0.0:
            raise DegenerateResponse(
                f"response column {cfg.response!r} is constant; peel target undefined"
            )
        feature_cols = [j for j in range(x.d) if j != resp_col]
    else:
        response = None
        feature_cols = list(range(x.d))
    feats = values[:, feature_cols]

    results: list[PeelResult] = []
    available = np.ones(n_total, dtype=bool)

    for _ in range(cfg.max_covers):
        rows = np.flatnonzero(available)
        if rows.size < 2:
            break
        result = _peel_one_box(feats, response, rows, feature_cols, cfg, n_total)
        if result is None:
            break
        results.append(result)
        available[result.retained_rows] = False
    return results


def _peel_one_box(
    feats: np.ndarray,
    response: np.ndarray | None,
    rows: np.ndarray,
    feature_cols: list[int],
    cfg: PrimConfig,
    n_total: int,
) -> PeelResult | None:
    n_start = rows.size
    sub = feats[rows]
    lower = sub.min(axis=0)
    upper = sub.max(axis=0)
    live = (upper - lower) > 0.0  # constant features carry no volume

    current = rows.copy()
    while True:
        best = None  # (score, j, side, cut, keep_mask)
        cur_vals = feats[current]
        for j in range(cur_vals.shape[1]):
            col = cur_vals[:, j]
            width = upper[j] - lower[j]
            if width <= 0.0:
                continue
            for side, cut in (
                ("low", quantile(col, cfg.alpha_peel)),
                ("high", quantile(col, 1.0 - cfg.alpha_peel)),
            ):
                keep = col >= cut if side == "low" else col <= cut
                kept = int(keep.sum())
                if kept == 0 or kept == current.size:
                    continue
                if response is not None:
                    score = float(response[current[keep]].mean())
                else:
                    # removed volume per (equal) removed mass, in units of
                    # the box: the emptiest slab wins
                    slab = cut - lower[j] if side == "low" else upper[j] - cut
                    score = slab / width
                if best is None or score > best[0]:
                    best = (score, j, side, cut, keep)
        if best is None:
            break
        _, j, side, cut, keep = best
        if int(keep.sum()) / n_start < cfg.beta_floor:
            break
        if side == "low":
            lower[j] = cut
        else:
            upper[j] = cut
        current = current[keep]

    if current.size == 0:
        return None
    box = IntervalBox(
        indices=tuple(c + 1 for c in feature_cols),
        lower=lower,
        upper=upper,
    )
    return PeelResult(
        box=box,
        retained_rows=np.sort(current),
        log_volume=_box_log_volume(lower, upper, live),
        retained_fraction=current.size / n_total,
    )
