"""Bump hunting by simultaneous quantile peeling in the principal-component
basis, with the verification machinery to back the statistical guarantees.
"""

from .covstats import (
    BootstrapReport,
    CovStats,
    OperatorNormVerdict,
    OrderingVerdict,
    PeelPipeline,
    bootstrap,
    cov_stats,
    gen_var_constancy,
    opnorm_check,
    ordering_check,
    preserved_cov,
    run_pipeline,
)
from .elliptical import (
    EllipticalModel,
    GaussianChi,
    Laplace,
    StudentT,
    TruncationCoeffs,
    sample_elliptical,
    sample_sphere,
    truncation_coeffs,
)
from .gapsel import GapSelection, ScreeTable, log_spectral_gap, naive_tail, scree_export
from .ingest import (
    FASHION_MNIST_CLASSES,
    LabeledDataset,
    load_labeled_dataset,
    read_csv_matrix,
    read_idx_images,
    read_idx_labels,
    split_by_label,
    write_csv_matrix,
)
from .matrixcore import (
    CovMatrix,
    DataMatrix,
    EigenBasis,
    eigendecompose,
    project,
    sample_covariance,
)
from .nfl import (
    NflVerdict,
    SearchAlgorithm,
    SearchSpace,
    TraceHistogram,
    algorithm_zoo,
    enumerate_strategies,
    nfl_verdict,
    trace_histogram,
)
from .peel import (
    IntervalBox,
    PeelResult,
    PeelSpec,
    PrimConfig,
    active_information,
    fastprim,
    interquantile_box,
    prim_classic,
    quantile,
)
from .rng import RngStream

__version__ = "0.1.0"

__all__ = [
    "BootstrapReport",
    "CovMatrix",
    "CovStats",
    "DataMatrix",
    "EigenBasis",
    "EllipticalModel",
    "FASHION_MNIST_CLASSES",
    "GapSelection",
    "GaussianChi",
    "IntervalBox",
    "LabeledDataset",
    "Laplace",
    "NflVerdict",
    "OperatorNormVerdict",
    "OrderingVerdict",
    "PeelPipeline",
    "PeelResult",
    "PeelSpec",
    "PrimConfig",
    "RngStream",
    "ScreeTable",
    "SearchAlgorithm",
    "SearchSpace",
    "StudentT",
    "TraceHistogram",
    "TruncationCoeffs",
    "active_information",
    "algorithm_zoo",
    "bootstrap",
    "cov_stats",
    "eigendecompose",
    "enumerate_strategies",
    "fastprim",
    "gen_var_constancy",
    "interquantile_box",
    "load_labeled_dataset",
    "log_spectral_gap",
    "naive_tail",
    "nfl_verdict",
    "opnorm_check",
    "ordering_check",
    "preserved_cov",
    "prim_classic",
    "project",
    "quantile",
    "read_csv_matrix",
    "read_idx_images",
    "read_idx_labels",
    "run_pipeline",
    "sample_covariance",
    "sample_elliptical",
    "sample_sphere",
    "scree_export",
    "split_by_label",
    "trace_histogram",
    "truncation_coeffs",
    "write_csv_matrix",
]
