"""Preserved-covariance statistics, their orderings, and bootstrap errors.

After a peel, the covariance of the surviving rows (all d coordinates,
conditioning only through row selection) is summarized by four columns:
total variance (trace), Frobenius norm, log generalized variance
(log-determinant over the numerically nonzero spectrum) and operator norm
(largest eigenvalue). Orderings between peel choices are reported as
effect sizes in standard-error units so thresholds can live in test
suites rather than here.

Standard errors for single-sample checks come from batch means: the rows
are cut into BLOCK_COUNT contiguous blocks, the statistic of interest is
recomputed per block, and the SE of the block mean is reported. This
keeps every check deterministic in its input. Bootstrap SEs (the spread
of a statistic across resampled replicates) are a separate, seeded path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import AllZeroSpectrum, EmptyRetention, ReplicateFailure
from .gapsel import GapSelection, log_spectral_gap, naive_tail
from .matrixcore import (
    CovMatrix,
    DataMatrix,
    EigenBasis,
    eigendecompose,
    project,
    sample_covariance,
)
from .peel import (
    MODE_EXPLICIT,
    MODE_VARIANCE,
    MODE_VOLUME,
    PeelResult,
    fastprim,
)
from .rng import RngStream

BLOCK_COUNT = 20
RANK_RTOL = 1e-12

STAT_COLUMNS = (
    "total_variance",
    "frobenius",
    "log_generalized_variance",
    "operator_norm",
)


@dataclass(frozen=True)
class CovStats:
    """The four summary columns of a preserved covariance.

    dropped_eigenvalues counts spectrum entries below RANK_RTOL times the
    top eigenvalue, which are excluded from the log generalized variance
    (rank-deficient covariances would otherwise poison the log-determinant).
    """

    total_variance: float
    frobenius: float
    log_generalized_variance: float
    operator_norm: float
    dropped_eigenvalues: int = 0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (
            self.total_variance,
            self.frobenius,
            self.log_generalized_variance,
            self.operator_norm,
        )


def preserved_cov(y: DataMatrix, result: PeelResult) -> CovMatrix:
    """Sample covariance of the retained rows of y (all d columns)."""
    rows = result.retained_rows
    if rows.size < y.d + 1:
        raise EmptyRetention(
            f"{rows.size} retained rows cannot support a {y.d}-dimensional covariance"
        )
    return sample_covariance(y.rows(rows))


def _clamped_spectrum(c: CovMatrix) -> np.ndarray:
    vals = np.linalg.eigvalsh(c.values)[::-1]
    top = max(float(vals[0]), 0.0)
    vals = np.where(vals < 0.0, 0.0, vals) if top >= 0 else vals
    return vals


def cov_stats(c: CovMatrix) -> CovStats:
    """Trace, Frobenius norm, log generalized variance and operator norm.

    Raises AllZeroSpectrum when every eigenvalue sits below the rank
    tolerance (the log-determinant of an effectively zero matrix).
    """
    vals = _clamped_spectrum(c)
    total = float(np.trace(c.values))
    frob = float(np.sqrt(np.sum(c.values**2)))
    opnorm = float(vals[0])
    keep = vals > RANK_RTOL * vals[0]
    if not np.any(keep):
        raise AllZeroSpectrum("all eigenvalues are at numerical zero")
    return CovStats(
        total_variance=total,
        frobenius=frob,
        log_generalized_variance=float(np.sum(np.log(vals[keep]))),
        operator_norm=opnorm,
        dropped_eigenvalues=int(np.sum(~keep)),
    )


def cov_stats_or_sentinel(c: CovMatrix) -> CovStats:
    """cov_stats, with -inf standing in for the log generalized variance of
    an all-zero spectrum (degenerate data should not abort a bootstrap)."""
    try:
        return cov_stats(c)
    except AllZeroSpectrum:
        vals = _clamped_spectrum(c)
        return CovStats(
            total_variance=float(np.trace(c.values)),
            frobenius=float(np.sqrt(np.sum(c.values**2))),
            log_generalized_variance=-math.inf,
            operator_norm=float(vals[0]),
            dropped_eigenvalues=c.d,
        )


# -- batch-means machinery ------------------------------------------------------


def _block_bounds(n: int, n_blocks: int) -> list[tuple[int, int]]:
    n_blocks = min(n_blocks, n)
    base, extra = divmod(n, n_blocks)
    bounds = []
    start = 0
    for b in range(n_blocks):
        stop = start + base + (1 if b < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def _block_values(
    y: DataMatrix, fn: Callable[[DataMatrix], float], n_blocks: int = BLOCK_COUNT
) -> np.ndarray:
    out = []
    for start, stop in _block_bounds(y.n, n_blocks):
        out.append(fn(DataMatrix(y.values[start:stop])))
    return np.asarray(out, dtype=np.float64)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return math.nan, math.nan
    if np.all(values == values[0]):
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def _margin(delta: float, se: float) -> float:
    if se == 0.0:
        return 0.0 if delta == 0.0 else math.copysign(math.inf, delta)
    return delta / se


def _explicit_peel_stats(y: DataMatrix, indices: Sequence[int], beta: float) -> CovStats:
    result = fastprim(y, None, len(indices), beta, mode=MODE_EXPLICIT, indices=indices)
    return cov_stats(preserved_cov(y, result))


# -- ordering checks -------------------------------------------------------------


@dataclass(frozen=True)
class OrderingVerdict:
    """Effect sizes for 'peel the pettiest band vs. peel the leading band'.

    Deltas are pettiest minus leading, estimated by batch means together
    with their standard errors; the margins are delta/SE.
    """

    pettiest: CovStats
    leading: CovStats
    trace_delta: float
    trace_se: float
    frobenius_delta: float
    frobenius_se: float

    @property
    def trace_ordered(self) -> bool:
        return self.pettiest.total_variance > self.leading.total_variance

    @property
    def frobenius_ordered(self) -> bool:
        return self.pettiest.frobenius > self.leading.frobenius

    @property
    def trace_margin(self) -> float:
        return _margin(self.trace_delta, self.trace_se)

    @property
    def frobenius_margin(self) -> float:
        return _margin(self.frobenius_delta, self.frobenius_se)


def ordering_check(y: DataMatrix, k: int, beta: float) -> OrderingVerdict:
    """Compare peeling the last k components against peeling the first k.

    `y` must already be rotated, columns sorted by decreasing variance.
    The bands are the raw spectrum extremes, matching the duality being
    checked.
    """
    d = y.d
    pettiest = tuple(range(d - k + 1, d + 1))
    leading = tuple(range(1, k + 1))
    if pettiest == leading:
        raise ValueError(f"k={k} gives identical leading and pettiest bands at d={d}")

    stats_p = _explicit_peel_stats(y, pettiest, beta)
    stats_l = _explicit_peel_stats(y, leading, beta)

    def block_delta(col: int) -> Callable[[DataMatrix], float]:
        def fn(block: DataMatrix) -> float:
            sp = _explicit_peel_stats(block, pettiest, beta).as_tuple()[col]
            sl = _explicit_peel_stats(block, leading, beta).as_tuple()[col]
            return sp - sl

        return fn

    trace_delta, trace_se = _mean_se(_block_values(y, block_delta(0)))
    frob_delta, frob_se = _mean_se(_block_values(y, block_delta(1)))
    return OrderingVerdict(
        pettiest=stats_p,
        leading=stats_l,
        trace_delta=trace_delta,
        trace_se=trace_se,
        frobenius_delta=frob_delta,
        frobenius_se=frob_se,
    )


def gen_var_constancy(
    y: DataMatrix, k: int, beta: float, subsets: Sequence[Sequence[int]]
) -> float:
    """Max pairwise |difference| of the preserved log generalized variance
    across the given truncation index sets. Callers compare against their
    own tolerance."""
    if len(subsets) < 2:
        raise ValueError("need at least two index subsets to compare")
    values = [
        _explicit_peel_stats(y, tuple(s), beta).log_generalized_variance
        for s in subsets
    ]
    return float(max(abs(a - b) for i, a in enumerate(values) for b in values[i + 1:]))


@dataclass(frozen=True)
class OperatorNormVerdict:
    """Operator norms by truncation band, with effect sizes.

    `with_first` truncates the band containing component 1; `others` maps
    each remaining band's start index to its operator norm. min_margin is
    the smallest (other - with_first)/SE over the other bands (large and
    positive when truncating component 1 really minimizes the norm);
    constancy_margin is the largest pairwise |difference|/SE among the
    other bands (small when the norm does not depend on that choice).
    """

    with_first: float
    others: dict[int, float]
    min_margin: float
    constancy_margin: float


def opnorm_check(y: DataMatrix, k: int, beta: float) -> OperatorNormVerdict:
    """Operator-norm behavior across truncation bands (needs d >= 3).

    Bands are consecutive index windows of width k: the leading one
    (contains component 1) and every window starting at 2..d-k+1.
    """
    d = y.d
    if d < 3:
        raise ValueError(f"operator-norm comparison needs d >= 3, got d={d}")
    if not 1 <= k <= d - 2:
        raise ValueError(f"k must leave at least two non-leading bands, got k={k}")
    first_band = tuple(range(1, k + 1))
    other_bands = [tuple(range(s, s + k)) for s in range(2, d - k + 2)]

    def opnorm_of(band: tuple[int, ...]) -> Callable[[DataMatrix], float]:
        return lambda data: _explicit_peel_stats(data, band, beta).operator_norm

    with_first = _explicit_peel_stats(y, first_band, beta).operator_norm
    others = {
        band[0]: _explicit_peel_stats(y, band, beta).operator_norm
        for band in other_bands
    }

    first_blocks = _block_values(y, opnorm_of(first_band))
    other_blocks = {band: _block_values(y, opnorm_of(band)) for band in other_bands}

    margins = []
    for band in other_bands:
        delta, se = _mean_se(other_blocks[band] - first_blocks)
        margins.append(_margin(delta, se))
    constancy = 0.0
    for i, a in enumerate(other_bands):
        for b in other_bands[i + 1:]:
            delta, se = _mean_se(other_blocks[a] - other_blocks[b])
            constancy = max(constancy, abs(_margin(delta, se)))
    return OperatorNormVerdict(
        with_first=with_first,
        others=others,
        min_margin=min(margins),
        constancy_margin=constancy,
    )


# -- the resample pipeline and its bootstrap --------------------------------------


@dataclass(frozen=True)
class PeelPipeline:
    """Everything between a raw data matrix and its preserved covariance:
    PCA, band selection, one simultaneous peel."""

    k: int
    beta: float
    mode: str = MODE_VOLUME
    band: str = "gap"
    indices: tuple[int, ...] | None = None


@dataclass(frozen=True)
class PipelineOutcome:
    basis: EigenBasis
    selection: GapSelection | None
    projected: DataMatrix
    result: PeelResult
    preserved: CovMatrix
    stats: CovStats


def run_pipeline(x: DataMatrix, pipeline: PeelPipeline) -> PipelineOutcome:
    """PCA -> band selection -> peel -> preserved covariance statistics."""
    basis = eigendecompose(sample_covariance(x))
    y = project(x, basis)
    selection = None
    if pipeline.mode == MODE_VOLUME:
        selection = (
            log_spectral_gap(basis, pipeline.k)
            if pipeline.band == "gap"
            else naive_tail(basis, pipeline.k)
        )
        indices = selection.pettiest_band
    elif pipeline.mode == MODE_VARIANCE:
        indices = tuple(range(1, pipeline.k + 1))
    elif pipeline.mode == MODE_EXPLICIT:
        if pipeline.indices is None:
            raise ValueError("explicit pipeline needs component indices")
        indices = pipeline.indices
    else:
        raise ValueError(f"unknown pipeline mode {pipeline.mode!r}")
    result = fastprim(
        y, basis, len(indices), pipeline.beta, mode=MODE_EXPLICIT, indices=indices
    )
    preserved = preserved_cov(y, result)
    return PipelineOutcome(
        basis=basis,
        selection=selection,
        projected=y,
        result=result,
        preserved=preserved,
        stats=cov_stats_or_sentinel(preserved),
    )


@dataclass(frozen=True)
class BootstrapReport:
    """Per-statistic bootstrap mean and standard error.

    The SE is the sample standard deviation of the statistic across
    replicates; replicate values are kept for paired comparisons.
    """

    means: dict[str, float]
    standard_errors: dict[str, float]
    replicates: np.ndarray  # (successful replicates, 4), STAT_COLUMNS order
    B: int
    failures: int
    seed: RngStream


def _replicate_se(values: np.ndarray) -> float:
    if np.all(values == values[0]):
        return 0.0
    return float(values.std(ddof=1))


def bootstrap(
    x: DataMatrix, pipeline: PeelPipeline, B: int, rng: RngStream
) -> BootstrapReport:
    """Resample rows with replacement B times and rerun the full pipeline.

    Rerunning PCA and band selection inside every replicate (not just the
    peel) is deliberate: it charges the selection's own variability to the
    standard errors. Replicate r always draws from substream r, so results
    are independent of worker count and iteration order. Aborts with
    ReplicateFailure when more than 1% of replicates cannot retain enough
    rows; rarer failures are dropped from the statistics.
    """
    if B < 2:
        raise ValueError(f"bootstrap needs B >= 2 replicates, got {B}")
    n = x.n
    rows = []
    failures = 0
    for r in range(B):
        gen = rng.split(r).generator()
        idx = gen.integers(0, n, size=n)
        try:
            outcome = run_pipeline(DataMatrix(x.values[idx], x.column_names), pipeline)
        except EmptyRetention:
            failures += 1
            continue
        rows.append(outcome.stats.as_tuple())
    if failures > 0.01 * B:
        raise ReplicateFailure(
            f"{failures} of {B} replicates retained too few rows for a "
            f"{x.d}-dimensional covariance"
        )
    reps = np.asarray(rows, dtype=np.float64)
    means = {}
    ses = {}
    for j, name in enumerate(STAT_COLUMNS):
        col = reps[:, j]
        means[name] = float(col[0]) if np.all(col == col[0]) else float(col.mean())
        ses[name] = _replicate_se(col)
    return BootstrapReport(
        means=means,
        standard_errors=ses,
        replicates=reps,
        B=B,
        failures=failures,
        seed=rng,
    )
