"""Elliptical-family samplers and truncation-coefficient oracles.

An elliptical vector is generated through its stochastic representation
X = mu + L * A * U with U uniform on the unit sphere, L a nonnegative
radial variable independent of U, and A a matrix with A A' = Sigma.
Three radial laws ship: the Gaussian one (L^2 chi-square with d degrees
of freedom), Student-t (heavier tails, dof > 2 so the covariance exists)
and symmetric Laplace. Any object exposing the same three methods works
as a radial law.

Truncating one component of the rotated vector to its central
inter-quantile interval rescales the preserved covariance diagonally:
the truncated coordinate's variance shrinks by a factor `peeled`, every
other coordinate's by a factor `unpeeled`. Both factors are computed
here, exactly by adaptive quadrature for the Gaussian radial with k=1,
and by Monte Carlo otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, stats
from scipy.special import betaln

from .errors import (
    InvalidRadialParam,
    QuadratureNonConvergent,
    UnsupportedRadial,
)
from .matrixcore import DataMatrix
from .rng import COEFF_STREAM, RngStream

QUADRATURE_RTOL = 1e-6


@dataclass(frozen=True)
class GaussianChi:
    """Radial law of the multivariate normal: L^2 ~ chi-square(d).

    The standardized one-dimensional marginal is N(0, 1) and the sample
    covariance converges to Sigma itself (factor 1).
    """

    def sample_radius(self, gen: np.random.Generator, n: int, d: int) -> np.ndarray:
        return np.sqrt(gen.chisquare(d, n))

    def covariance_factor(self, d: int) -> float:
        return 1.0

    def marginal_quantile(self, p: float) -> float:
        return float(stats.norm.ppf(p))


@dataclass(frozen=True)
class StudentT:
    """Student-t radial: L^2 / d ~ F(d, dof). Covariance is dof/(dof-2)
    times Sigma, so dof <= 2 is rejected at construction."""

    dof: float

    def __post_init__(self):
        if not self.dof > 2.0:
            raise InvalidRadialParam(
                f"Student-t radial needs dof > 2 for a finite covariance, got {self.dof}"
            )

    def sample_radius(self, gen: np.random.Generator, n: int, d: int) -> np.ndarray:
        return np.sqrt(d * gen.f(d, self.dof, n))

    def covariance_factor(self, d: int) -> float:
        return self.dof / (self.dof - 2.0)

    def marginal_quantile(self, p: float) -> float:
        return float(stats.t.ppf(p, self.dof))


@dataclass(frozen=True)
class Laplace:
    """Symmetric multivariate Laplace radial: L = sqrt(W) * chi with
    W ~ Exp(1). Covariance factor 1; marginals are Laplace(0, 1/sqrt(2))."""

    def sample_radius(self, gen: np.random.Generator, n: int, d: int) -> np.ndarray:
        mixing = gen.exponential(1.0, n)
        chi_sq = gen.chisquare(d, n)
        return np.sqrt(mixing * chi_sq)

    def covariance_factor(self, d: int) -> float:
        return 1.0

    def marginal_quantile(self, p: float) -> float:
        return float(stats.laplace.ppf(p, scale=1.0 / math.sqrt(2.0)))


@dataclass(frozen=True)
class EllipticalModel:
    """mean + scale * (radial draw) * (sphere draw), with scale A such that
    A A' is the target shape matrix Sigma."""

    mean: np.ndarray
    scale: np.ndarray
    radial: object

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).ravel()
        scale = np.asarray(self.scale, dtype=np.float64)
        if scale.ndim != 2 or scale.shape[0] != scale.shape[1]:
            raise ValueError(f"scale must be square, got shape {scale.shape}")
        if mean.size != scale.shape[0]:
            raise ValueError(
                f"mean has {mean.size} entries but scale is {scale.shape[0]}-dimensional"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(scale))):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)

    @property
    def d(self) -> int:
        return self.mean.size

    @property
    def sigma(self) -> np.ndarray:
        """Shape matrix A A'. The sampling covariance is this times the
        radial law's covariance factor."""
        return self.scale @ self.scale.T


def sample_sphere(d: int, n: int, rng: RngStream) -> DataMatrix:
    """n points uniform on the unit sphere in R^d, one per row."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    gen = rng.generator()
    z = gen.standard_normal((n, d))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    # A zero draw has probability zero but would poison the division.
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        z[bad] = gen.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
    return DataMatrix(z / norms)


def sample_elliptical(model: EllipticalModel, n: int, rng: RngStream) -> DataMatrix:
    """Draw n rows of mu + L * A * U (sphere draws first, then radii)."""
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    gen = rng.generator()
    z = gen.standard_normal((n, model.d))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        z[bad] = gen.standard_normal((int(bad.sum()), model.d))
        norms = np.linalg.norm(z, axis=1, keepdims=True)
    u = z / norms
    radii = np.asarray(model.radial.sample_radius(gen, n, model.d), dtype=np.float64)
    if np.any(radii < 0.0):
        raise InvalidRadialParam("radial law produced a negative radius")
    return DataMatrix(model.mean + (radii[:, None] * u) @ model.scale.T)


class TruncationCoeffs(NamedTuple):
    """Diagonal scale factors of the preserved covariance: `unpeeled`
    multiplies every untouched eigenvalue, `peeled` the truncated ones."""

    unpeeled: float
    peeled: float


def _gaussian_sphere_integrals(d: int, alpha: float):
    """The three sphere-radius integrals behind the truncation coefficients
    for the Gaussian radial and a single truncated coordinate.

    Uses |O_i|^2 ~ Beta(1/2, (d-1)/2) on the sphere and R^2 ~ chi-square(d);
    the substitution omega = sin(theta) removes the endpoint singularity of
    the sphere-coordinate density. Returns (D, I1, I2, relative_error).
    """
    q = stats.norm.ppf(1.0 - alpha / 2.0)
    log_norm = math.log(2.0) - betaln(0.5, (d - 1) / 2.0)

    def density(t: float) -> float:
        return math.exp(log_norm) * math.cos(t) ** (d - 2)

    def radius_cdf(x: float) -> float:
        return float(stats.chi2.cdf(x * x, d))

    def radius_second_moment_below(x: float) -> float:
        # E[R^2 1{R <= x}] = d * P(chi2_{d+2} <= x^2)
        return d * float(stats.chi2.cdf(x * x, d + 2))

    half_pi = math.pi / 2.0
    denom, denom_err = integrate.quad(
        lambda t: radius_cdf(q / math.sin(t)) * density(t), 0.0, half_pi, limit=200
    )
    first, first_err = integrate.quad(
        lambda t: radius_second_moment_below(q / math.sin(t)) * density(t),
        0.0,
        half_pi,
        limit=200,
    )
    second, second_err = integrate.quad(
        lambda t: math.sin(t) ** 2
        * radius_second_moment_below(q / math.sin(t))
        * density(t),
        0.0,
        half_pi,
        limit=200,
    )
    rel_err = max(
        denom_err / max(abs(denom), 1e-300),
        first_err / max(abs(first), 1e-300),
        second_err / max(abs(second), 1e-300),
    )
    return denom, first, second, rel_err


def truncation_coeffs(
    model: EllipticalModel,
    k: int,
    alpha: float,
    rng: RngStream | None = None,
    mc_samples: int = 2_000_000,
) -> TruncationCoeffs:
    """Scale factors of the preserved covariance after truncating k rotated
    components to their central (1-alpha) inter-quantile intervals.

    k=1 with the Gaussian radial integrates the defining integrals by
    adaptive quadrature (error checked against QUADRATURE_RTOL); any other
    combination falls back to Monte Carlo on the standardized spherical
    vector using the radial law's exact marginal quantile.
    """
    d = model.d
    if not 1 <= k < d:
        raise ValueError(f"k must be in 1..{d - 1}, got {k}")
    if not 0.0 < k * alpha <= 1.0:
        raise ValueError(f"need 0 < k*alpha <= 1, got k={k}, alpha={alpha}")

    if k == 1:
        if not isinstance(model.radial, GaussianChi):
            raise UnsupportedRadial(
                f"quadrature is implemented for the Gaussian radial only, "
                f"got {type(model.radial).__name__}; use k > 1 Monte Carlo "
                f"or sample-based estimates instead"
            )
        denom, first, second, rel_err = _gaussian_sphere_integrals(d, alpha)
        if rel_err > QUADRATURE_RTOL:
            raise QuadratureNonConvergent(
                f"relative error estimate {rel_err:.2e} exceeds {QUADRATURE_RTOL:.0e}"
            )
        return TruncationCoeffs(
            unpeeled=(first - second) / ((d - 1) * denom),
            peeled=second / denom,
        )

    return _coeffs_monte_carlo(model, k, alpha, rng, mc_samples)


def _coeffs_monte_carlo(
    model: EllipticalModel,
    k: int,
    alpha: float,
    rng: RngStream | None,
    mc_samples: int,
) -> TruncationCoeffs:
    """Conditional variances of a standardized spherical sample under the
    joint central-box event, averaged over exchangeable coordinates."""
    if rng is None:
        rng = RngStream(0, COEFF_STREAM)
    d = model.d
    standardized = EllipticalModel(np.zeros(d), np.eye(d), model.radial)
    s = sample_elliptical(standardized, mc_samples, rng).values
    q = model.radial.marginal_quantile(1.0 - alpha / 2.0)
    inside = np.all(np.abs(s[:, :k]) <= q, axis=1)
    kept = s[inside]
    if kept.shape[0] < d + 1:
        raise ValueError("Monte Carlo retained too few rows; increase mc_samples")
    variances = kept.var(axis=0, ddof=1)
    return TruncationCoeffs(
        unpeeled=float(variances[k:].mean()),
        peeled=float(variances[:k].mean()),
    )
