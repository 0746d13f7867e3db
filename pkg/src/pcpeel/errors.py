"""Exception types shared across the package.

Every failure mode a caller can reasonably branch on gets its own class;
everything derives from PcpeelError so `except PcpeelError` catches them all.
Generic misuse (wrong types, impossible parameters) stays ValueError.
"""


class PcpeelError(Exception):
    """Base class for all package-specific errors."""


# -- matrix primitives --------------------------------------------------------

class TooFewSamples(PcpeelError):
    """A covariance estimate was requested from fewer than two rows."""


class NonFinite(PcpeelError):
    """Input contains NaN or infinite entries."""


class NotSymmetric(PcpeelError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class DimensionMismatch(PcpeelError):
    """Operands disagree on dimensionality."""


# -- elliptical samplers and coefficient oracles ------------------------------

class InvalidRadialParam(PcpeelError):
    """Radial-law parameters outside the valid range (e.g. Student-t dof <= 2)."""


class UnsupportedRadial(PcpeelError):
    """The requested operation has no implementation for this radial law."""


class QuadratureNonConvergent(PcpeelError):
    """Adaptive quadrature failed to reach the required relative accuracy."""


# -- peeling -------------------------------------------------------------------

class EmptyColumn(PcpeelError):
    """Quantile of an empty sequence."""


class EmptyRetention(PcpeelError):
    """Too few rows survived the peel for downstream statistics."""


class DegenerateResponse(PcpeelError):
    """The response column is constant, so the peel argmax is undefined."""


class NonPositiveFraction(PcpeelError):
    """A probability argument must lie in (0, 1]."""


# -- covariance statistics -----------------------------------------------------

class AllZeroSpectrum(PcpeelError):
    """Log generalized variance of an (effectively) zero matrix."""


class ReplicateFailure(PcpeelError):
    """Too many bootstrap replicates failed to retain enough rows."""


# -- spectral-gap selection ----------------------------------------------------

class DegenerateSpectrum(PcpeelError):
    """No admissible spectral gap exists (flat or floor-level spectrum)."""


# -- finite search enumeration ---------------------------------------------------

class TooLarge(PcpeelError):
    """The strategy space exceeds the exact-enumeration guard."""


class BudgetExceeded(PcpeelError):
    """Full objective-function enumeration would exceed the feasibility guard."""


# -- file ingestion --------------------------------------------------------------

class BadMagic(PcpeelError):
    """IDX file magic number does not match the expected record type."""


class TruncatedPayload(PcpeelError):
    """IDX payload is shorter than the header promises."""


class TrailingGarbage(PcpeelError):
    """IDX file has bytes left over after the declared payload."""


class LabelOutOfRange(PcpeelError):
    """A label byte falls outside 0..9."""


class UnknownLabel(PcpeelError):
    """The requested class label has no rows."""


class RaggedRows(PcpeelError):
    """CSV rows have inconsistent column counts."""


class NonNumericCell(PcpeelError):
    """A CSV data cell failed to parse as a number."""
