"""Exponential-family process models and the carrier-ratio thinning density.

Each supported family describes the time-``t`` marginal of a process with
independent, stationary increments as an exponential family in a natural
parameter ``theta``:

    f_theta(x; t) = exp(theta . x - t * psi(theta)) * h_t(x),

where ``psi`` is the log-partition and ``h_t`` a theta-free carrier.
Because increments are independent, the conditional density of the earlier
slice ``x_tilde = A_{alpha t}`` given the observed slice ``x = A_t`` is a
pure carrier ratio in which ``theta`` cancels:

    g(x_tilde; x) = h_{alpha t}(x_tilde) * h_{(1-alpha) t}(x - x_tilde) / h_t(x).

This module holds the family descriptors, the feature/example containers
with their support invariants, ``log_partition``, and the carrier-ratio
density ``thinning_log_density``.  Sampling from the kernel lives in
:mod:`levyaug.thinning`.

Concrete carriers (up to additive constants dropped only for Wishart):

* Poisson:   ``log h_t(x) = sum_j [x_j log t - log x_j!]``
* Gaussian:  ``log h_t(x) = -x' S^-1 x / (2t) - (d/2) log(2 pi t) - logdet(S)/2``
  with ``S`` the family covariance
* Gamma:     ``log h_t(x) = sum_j (t/2 - 1) log x_j - d log Gamma(t/2) - (dt/2) log 2``
* Wishart:   ``log h_t(x) = ((t - d - 1)/2) logdet x``  (unnormalized; the
  multivariate-gamma constant is omitted, see ``thinning_density_normalized``)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ParameterError, SupportError

__all__ = [
    "FamilyKind",
    "LevyFamily",
    "poisson_family",
    "gaussian_family",
    "gamma_family",
    "wishart_family",
    "Topic",
    "Example",
    "PseudoExample",
    "check_features",
    "check_example",
    "log_partition",
    "log_carrier",
    "thinning_log_density",
    "thinning_density_normalized",
]


class FamilyKind(enum.Enum):
    POISSON = "poisson"
    GAUSSIAN = "gaussian"
    GAMMA = "gamma"
    WISHART = "wishart"


def _frozen_array(values, dtype=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _is_symmetric(m: np.ndarray, tol: float = 1e-10) -> bool:
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.T, atol=tol)


@dataclass(frozen=True, eq=False)
class LevyFamily:
    """Descriptor of one of the four process families.

    ``sigma`` is the known covariance of the Gaussian family and must be
    present exactly for that family; the Wishart family is parameterized
    by its matrix dimension ``d`` alone.
    """

    kind: FamilyKind
    d: int
    sigma: np.ndarray | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ParameterError(f"dimension must be >= 1, got {self.d}")
        if self.kind is FamilyKind.GAUSSIAN:
            if self.sigma is None:
                raise ParameterError("Gaussian family requires a covariance matrix")
            sigma = np.asarray(self.sigma, dtype=float)
            if sigma.shape != (self.d, self.d):
                raise ParameterError(
                    f"covariance must be {self.d}x{self.d}, got {sigma.shape}"
                )
            if not _is_symmetric(sigma):
                raise ParameterError("covariance must be symmetric")
            if np.linalg.eigvalsh(sigma).min() <= 0.0:
                raise ParameterError("covariance must be positive-definite")
            object.__setattr__(self, "sigma", _frozen_array(sigma, dtype=float))
        elif self.sigma is not None:
            raise ParameterError("sigma is only meaningful for the Gaussian family")

    def __eq__(self, other):
        if not isinstance(other, LevyFamily):
            return NotImplemented
        if self.kind is not other.kind or self.d != other.d:
            return False
        if self.sigma is None:
            return other.sigma is None
        return other.sigma is not None and np.array_equal(self.sigma, other.sigma)

    def __repr__(self):
        extra = ", sigma=<matrix>" if self.sigma is not None else ""
        return f"LevyFamily({self.kind.value}, d={self.d}{extra})"


def poisson_family(d: int) -> LevyFamily:
    return LevyFamily(FamilyKind.POISSON, d)


def gaussian_family(d: int, sigma=None) -> LevyFamily:
    if sigma is None:
        sigma = np.eye(d)
    return LevyFamily(FamilyKind.GAUSSIAN, d, sigma)


def gamma_family(d: int) -> LevyFamily:
    return LevyFamily(FamilyKind.GAMMA, d)


def wishart_family(d: int) -> LevyFamily:
    return LevyFamily(FamilyKind.WISHART, d)


@dataclass(frozen=True, eq=False)
class Topic:
    """Natural parameter of one mixture component.

    ``theta`` is a length-``d`` vector for the vector families and a
    ``d x d`` symmetric negative-definite matrix for the Wishart family.
    Domains are enforced here, at construction, so a misconfigured
    simulation fails immediately rather than mid-run:

    * Gamma requires every ``theta_j < 0`` (theta_j = -1 / (2 sigma_j^2)),
    * Wishart requires ``theta`` negative-definite,
    * Poisson and Gaussian accept any finite vector.

    With ``unit_rate_mass=True`` a Poisson topic additionally asserts the
    rate normalization ``sum_j exp(theta_j) = 1`` (to 1e-12), the
    convention under which the observation time equals the expected
    total count.
    """

    theta: np.ndarray
    family: LevyFamily
    unit_rate_mass: bool = False

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        kind = self.family.kind
        d = self.family.d
        if kind is FamilyKind.WISHART:
            if theta.shape != (d, d):
                raise ParameterError(f"Wishart natural parameter must be {d}x{d}")
            if not _is_symmetric(theta):
                raise ParameterError("Wishart natural parameter must be symmetric")
            if np.linalg.eigvalsh(theta).max() >= 0.0:
                raise ParameterError("Wishart natural parameter must be negative-definite")
        else:
            if theta.shape != (d,):
                raise ParameterError(f"natural parameter must have length {d}")
            if not np.all(np.isfinite(theta)):
                raise ParameterError("natural parameter must be finite")
            if kind is FamilyKind.GAMMA and np.any(theta >= 0.0):
                raise ParameterError("Gamma natural parameters must be negative")
        if self.unit_rate_mass:
            if kind is not FamilyKind.POISSON:
                raise ParameterError("unit_rate_mass only applies to Poisson topics")
            mass = float(np.exp(theta).sum())
            if abs(mass - 1.0) > 1e-12:
                raise ParameterError(
                    f"rate mass sum(exp(theta)) = {mass!r} violates unit normalization"
                )
        object.__setattr__(self, "theta", _frozen_array(theta, dtype=float))


@dataclass(frozen=True, eq=False)
class Example:
    """One labelled observation: features ``x``, class ``y`` in 1..K, and
    the information content ``t`` (the process time of the slice)."""

    x: np.ndarray
    y: int
    t: float

    def __post_init__(self):
        if self.t <= 0.0 or not np.isfinite(self.t):
            raise ParameterError(f"information content must be positive, got {self.t}")
        if self.y < 1:
            raise ParameterError(f"class labels are 1-based, got {self.y}")
        object.__setattr__(self, "x", _frozen_array(self.x))


@dataclass(frozen=True, eq=False)
class PseudoExample:
    """A thinned copy of an example: features sliced back to time
    ``t_tilde = alpha * t``, tagged with the index of its origin."""

    x_tilde: np.ndarray
    y: int
    origin_id: int
    alpha: float
    t_tilde: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.t_tilde <= 0.0:
            raise ParameterError("thinned information content must be positive")
        object.__setattr__(self, "x_tilde", _frozen_array(self.x_tilde))


# --------------------------------------------------------------------------
# Support checks
# --------------------------------------------------------------------------

def _check_pd(m: np.ndarray, what: str) -> None:
    if not _is_symmetric(m):
        raise SupportError(f"{what} must be a symmetric matrix")
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise SupportError(f"{what} must be positive-definite") from None


def check_features(family: LevyFamily, x) -> np.ndarray:
    """Validate ``x`` against the family's support and return it as an array.

    Vector families expect a length-``d`` vector (Poisson: nonnegative
    integers, Gaussian: finite reals, Gamma: strictly positive reals);
    the Wishart family expects a ``d x d`` symmetric positive-definite
    matrix.  Raises :class:`SupportError` on violation.
    """
    arr = np.asarray(x)
    kind = family.kind
    if kind is FamilyKind.WISHART:
        if arr.shape != (family.d, family.d):
            raise SupportError(
                f"Wishart features must be {family.d}x{family.d}, got shape {arr.shape}"
            )
        arr = np.asarray(arr, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise SupportError("features must be finite")
        _check_pd(arr, "Wishart feature matrix")
        return arr
    if arr.shape != (family.d,):
        raise SupportError(f"features must have length {family.d}, got shape {arr.shape}")
    if kind is FamilyKind.POISSON:
        values = np.asarray(arr, dtype=float)
        if not np.all(np.isfinite(values)):
            raise SupportError("features must be finite")
        if np.any(values < 0) or np.any(values != np.floor(values)):
            raise SupportError("Poisson features must be nonnegative integers")
        return np.asarray(np.round(values), dtype=np.int64)
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise SupportError("features must be finite")
    if kind is FamilyKind.GAMMA and np.any(arr <= 0.0):
        raise SupportError("Gamma features must be strictly positive")
    return arr


def check_example(family: LevyFamily, ex: Example) -> None:
    """Validate an example against a family (support plus the Wishart
    density condition ``t >= d``)."""
    check_features(family, ex.x)
    if family.kind is FamilyKind.WISHART and ex.t < family.d:
        raise SupportError(
            f"Wishart examples need t >= d for a density; got t={ex.t}, d={family.d}"
        )


# --------------------------------------------------------------------------
# Log-partition
# --------------------------------------------------------------------------

def log_partition(topic: Topic) -> float:
    """psi(theta), the per-unit-time log-partition of the family.

    Poisson: ``sum_j exp(theta_j)``.  Gaussian: ``theta' Sigma theta / 2``.
    Gamma: ``-sum_j log(-2 theta_j) / 2``.  Wishart: ``-logdet(-2 theta)/2``.
    Topic construction has already enforced the natural domain.
    """
    theta = topic.theta
    kind = topic.family.kind
    if kind is FamilyKind.POISSON:
        return float(np.exp(theta).sum())
    if kind is FamilyKind.GAUSSIAN:
        return float(0.5 * theta @ topic.family.sigma @ theta)
    if kind is FamilyKind.GAMMA:
        return float(-0.5 * np.log(-2.0 * theta).sum())
    sign, logdet = np.linalg.slogdet(-2.0 * theta)
    if sign <= 0:
        raise ParameterError("Wishart natural parameter left its domain")
    return float(-0.5 * logdet)


# --------------------------------------------------------------------------
# Carriers and the thinning density
# --------------------------------------------------------------------------

def log_carrier(family: LevyFamily, x: np.ndarray, t: float) -> float:
    """log h_t(x), the theta-free carrier of the family's t-marginal.

    Exact (normalized) for Poisson, Gaussian and Gamma.  For Wishart the
    multivariate-gamma constant is dropped, so only carrier *ratios* are
    meaningful for that family.
    """
    if t <= 0.0:
        raise ParameterError(f"process time must be positive, got {t}")
    kind = family.kind
    if kind is FamilyKind.POISSON:
        xi = np.asarray(x, dtype=float)
        return float((xi * np.log(t) - gammaln(xi + 1.0)).sum())
    if kind is FamilyKind.GAUSSIAN:
        x = np.asarray(x, dtype=float)
        sigma = family.sigma
        sol = np.linalg.solve(sigma, x)
        _, logdet = np.linalg.slogdet(sigma)
        d = family.d
        return float(-0.5 * (x @ sol) / t - 0.5 * d * np.log(2.0 * np.pi * t) - 0.5 * logdet)
    if kind is FamilyKind.GAMMA:
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0):
            raise SupportError("Gamma carrier evaluated outside the positive orthant")
        d = family.d
        return float(
            (0.5 * t - 1.0) * np.log(x).sum()
            - d * gammaln(0.5 * t)
            - 0.5 * d * t * np.log(2.0)
        )
    sign, logdet = np.linalg.slogdet(x)
    if sign <= 0:
        raise SupportError("Wishart carrier evaluated outside the PD cone")
    return float(0.5 * (t - family.d - 1.0) * logdet)


def thinning_density_normalized(family: LevyFamily) -> bool:
    """Whether :func:`thinning_log_density` returns a normalized log-density
    for this family.  False only for Wishart, whose carrier constant is
    omitted; its sampler is validated distributionally instead."""
    return family.kind is not FamilyKind.WISHART


def thinning_log_density(
    family: LevyFamily,
    x,
    x_tilde,
    t: float,
    alpha: float,
) -> float:
    """Log-density of the thinned slice ``x_tilde`` given the observed
    ``x`` at time ``t``, evaluated as the carrier ratio

        log h_{alpha t}(x_tilde) + log h_{(1-alpha) t}(x - x_tilde) - log h_t(x).

    In particular this equals the product-binomial log-pmf for Poisson,
    the N(alpha x, alpha (1-alpha) t Sigma) log-density for Gaussian, and
    the product of scaled Beta(alpha t/2, (1-alpha) t/2) log-densities for
    Gamma.  For Wishart the value is unnormalized
    (see :func:`thinning_density_normalized`).
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in the open interval (0, 1), got {alpha}")
    x = check_features(family, x)
    kind = family.kind
    if kind is FamilyKind.WISHART:
        x_tilde = np.asarray(x_tilde, dtype=float)
        if x_tilde.shape != x.shape:
            raise SupportError("thinned features must match the original's shape")
        _check_pd(x_tilde, "thinned feature matrix")
        _check_pd(x - x_tilde, "feature increment x - x_tilde")
        rest = x - x_tilde
    elif kind is FamilyKind.POISSON:
        x_tilde = check_features(family, x_tilde)
        if np.any(x_tilde > x):
            raise SupportError("thinned counts must be dominated componentwise")
        rest = x - x_tilde
    elif kind is FamilyKind.GAMMA:
        x_tilde = np.asarray(x_tilde, dtype=float)
        if x_tilde.shape != x.shape:
            raise SupportError("thinned features must match the original's shape")
        if np.any(x_tilde <= 0.0) or np.any(x_tilde >= x):
            raise SupportError("Gamma thinning requires 0 < x_tilde < x componentwise")
        rest = x - x_tilde
    else:
        x_tilde = check_features(family, x_tilde)
        rest = x - x_tilde
    return (
        log_carrier(family, x_tilde, alpha * t)
        + log_carrier(family, rest, (1.0 - alpha) * t)
        - log_carrier(family, x, t)
    )
