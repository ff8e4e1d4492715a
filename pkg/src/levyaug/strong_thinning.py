"""The maximum-thinning limit of the augmented logistic objective.

As the thinning fraction goes to zero (with unboundedly many pseudo-copies
per original), the per-example logistic loss, rescaled by 1/alpha and
recentered by log K, converges to a deterministic limit.  Writing the
underlying process as drift + diffusion + compound-Poisson jumps, the
limit depends on the observation only through three conditional
quantities:

* ``mu(x)``  - conditional mean of drift plus diffusion at time t given x,
* ``lam(x)`` - conditional expected number of jumps on [0, t] given x,
* ``nu(x)``  - distribution of a single jump given x (finite support here),

and equals, for coefficients in the centered gauge (columns of beta sum
to zero),

    limit_loss(beta; x, y) = -mu(x) . beta_y
                             + (t / 2K) * sum_k beta_k' Sigma beta_k
                             + lam(x) * sum_z nu(z | x) loss(beta; z, y).

Two families ship with closed-form conditional jump laws:

* Gaussian (pure diffusion): mu(x) = x, lam = 0.  The summed limit loss is
  then an exact quadratic whose minimizer is a linear solve.
* Poisson (pure unit-basis jumps): mu = 0, lam(x) = sum_j x_j and nu is
  categorical over basis vectors with weights x_j / sum x.  The summed
  limit loss collapses to a per-word weighted logistic objective, which
  is why this endpoint reproduces naive-Bayes class probabilities on
  single words.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .errors import DegenerateDataError, OptimizationError, ParameterError
from .families import Example, FamilyKind, LevyFamily
from .logistic import (
    FeatureMap,
    LogisticModel,
    TrainConfig,
    center_columns,
    fit_logistic,
)
from .rng import RngState
from .thinning import ThinningConfig, generate_pseudo_examples

__all__ = [
    "JumpKind",
    "LevyItoDescriptor",
    "ConditionalJumpLaw",
    "gaussian_limit_law",
    "poisson_limit_law",
    "conditional_jump_law",
    "decomposition_gap",
    "limit_loss",
    "limit_loss_gradient",
    "fit_strong_thinning",
    "AlphaPathPoint",
    "alpha_path_converges",
    "naive_bayes_poisson_fit",
    "PoissonNaiveBayes",
]


class JumpKind(enum.Enum):
    NONE = "none"
    UNIT_BASIS = "unit_basis"


@dataclass(frozen=True, eq=False)
class LevyItoDescriptor:
    """Drift vector, diffusion covariance and jump structure of the
    underlying process.  At least one of diffusion / jumps must be
    nontrivial."""

    drift: np.ndarray
    diffusion: np.ndarray
    jumps: JumpKind = JumpKind.NONE

    def __post_init__(self):
        drift = np.asarray(self.drift, dtype=float)
        diffusion = np.asarray(self.diffusion, dtype=float)
        p = drift.shape[0]
        if diffusion.shape != (p, p):
            raise ParameterError("diffusion matrix must be p x p")
        if not np.allclose(diffusion, diffusion.T, atol=1e-10):
            raise ParameterError("diffusion matrix must be symmetric")
        if np.linalg.eigvalsh(diffusion).min() < -1e-10:
            raise ParameterError("diffusion matrix must be positive semi-definite")
        if self.jumps is JumpKind.NONE and not np.any(diffusion):
            raise ParameterError("descriptor needs a diffusion part or a jump part")
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "diffusion", diffusion)


@dataclass(frozen=True)
class ConditionalJumpLaw:
    """Conditional ingredients of the limit loss, as functions of an
    example: ``mu`` -> vector, ``lam`` -> nonnegative scalar, ``nu`` ->
    (weights, atoms) with weights summing to one over finitely many jump
    vectors (an empty support encodes the no-jump case)."""

    mu: Callable[[Example], np.ndarray]
    lam: Callable[[Example], float]
    nu: Callable[[Example], tuple[np.ndarray, np.ndarray]]


def gaussian_limit_law() -> ConditionalJumpLaw:
    """Pure-diffusion law: the conditional mean is the observation itself
    and there are no jumps."""
    return ConditionalJumpLaw(
        mu=lambda ex: np.asarray(ex.x, dtype=float),
        lam=lambda ex: 0.0,
        nu=lambda ex: (np.zeros(0), np.zeros((0, np.asarray(ex.x).shape[0]))),
    )


def poisson_limit_law() -> ConditionalJumpLaw:
    """Unit-basis jump law: given counts x, the process jumped sum(x)
    times, and a single jump is the j-th basis vector with probability
    x_j / sum(x)."""

    def nu(ex: Example):
        x = np.asarray(ex.x, dtype=float)
        total = x.sum()
        if total <= 0:
            return np.zeros(0), np.zeros((0, x.shape[0]))
        support = np.flatnonzero(x)
        weights = x[support] / total
        atoms = np.zeros((support.size, x.shape[0]))
        atoms[np.arange(support.size), support] = 1.0
        return weights, atoms

    return ConditionalJumpLaw(
        mu=lambda ex: np.zeros(np.asarray(ex.x).shape[0]),
        lam=lambda ex: float(np.asarray(ex.x, dtype=float).sum()),
        nu=nu,
    )


def conditional_jump_law(descriptor: LevyItoDescriptor) -> ConditionalJumpLaw:
    """Closed-form conditional law for the two descriptor shapes the
    limit is derived for: pure diffusion, or zero diffusion with
    unit-basis jumps."""
    if descriptor.jumps is JumpKind.NONE:
        return gaussian_limit_law()
    if not np.any(descriptor.diffusion) and not np.any(descriptor.drift):
        return poisson_limit_law()
    raise ParameterError(
        "no closed-form conditional jump law for a mixed drift/diffusion/jump descriptor"
    )


def decomposition_gap(law: ConditionalJumpLaw, ex: Example) -> float:
    """Max-norm residual of x = mu(x) + lam(x) * E_nu[z]; should be ~0."""
    weights, atoms = law.nu(ex)
    mean_jump = atoms.T @ weights if weights.size else np.zeros(np.asarray(ex.x).shape[0])
    recon = law.mu(ex) + law.lam(ex) * mean_jump
    return float(np.abs(np.asarray(ex.x, dtype=float) - recon).max())


# --------------------------------------------------------------------------
# The limit loss
# --------------------------------------------------------------------------

def _limit_terms(beta, ex: Example, law, sigma):
    """Value and raw gradient of the limit loss at centered beta."""
    p, k = beta.shape
    mu = law.mu(ex)
    lam = law.lam(ex)
    weights, atoms = law.nu(ex)

    value = -float(mu @ beta[:, ex.y - 1])
    grad = np.zeros_like(beta)
    grad[:, ex.y - 1] -= mu

    sigma_beta = sigma @ beta
    value += 0.5 * ex.t / k * float((beta * sigma_beta).sum())
    grad += (ex.t / k) * sigma_beta

    if lam > 0.0 and weights.size:
        scores = atoms @ beta  # (m, k)
        lse = logsumexp(scores, axis=1)
        value += lam * float(weights @ (lse - scores[:, ex.y - 1]))
        soft = np.exp(scores - lse[:, None])
        soft[:, ex.y - 1] -= 1.0
        grad += lam * atoms.T @ (weights[:, None] * soft)
    return value, grad


def limit_loss(
    beta: np.ndarray,
    x,
    y: int,
    law: ConditionalJumpLaw,
    sigma: np.ndarray,
    t: float,
) -> float:
    """Limit of (1/alpha) * (expected thinned loss - log K), dropping
    beta-free constants.  ``beta`` is centered internally before
    evaluation, since the formula lives in the centered gauge."""
    beta = center_columns(np.asarray(beta, dtype=float))
    ex = Example(x=x, y=y, t=t)
    value, _ = _limit_terms(beta, ex, law, np.asarray(sigma, dtype=float))
    return value


def limit_loss_gradient(
    beta: np.ndarray,
    x,
    y: int,
    law: ConditionalJumpLaw,
    sigma: np.ndarray,
    t: float,
) -> np.ndarray:
    """Gradient of :func:`limit_loss` as implemented, i.e. of the map
    beta -> limit_loss(center(beta)); the chain rule through the
    centering projection is included."""
    beta_c = center_columns(np.asarray(beta, dtype=float))
    ex = Example(x=x, y=y, t=t)
    _, grad = _limit_terms(beta_c, ex, law, np.asarray(sigma, dtype=float))
    return center_columns(grad)


# --------------------------------------------------------------------------
# Fitting the limit objective
# --------------------------------------------------------------------------

def _expand(gamma: np.ndarray) -> np.ndarray:
    """Map the free (p, K-1) block onto the centered constraint surface."""
    last = -gamma.sum(axis=1, keepdims=True)
    return np.concatenate([gamma, last], axis=1)


def _contract(grad_beta: np.ndarray) -> np.ndarray:
    return grad_beta[:, :-1] - grad_beta[:, -1:]


def _labels_and_k(examples) -> int:
    ys = np.array([ex.y for ex in examples], dtype=np.int64)
    k = int(ys.max())
    missing = sorted(set(range(1, k + 1)) - set(np.unique(ys).tolist()))
    if missing:
        raise DegenerateDataError(f"no examples for class label(s) {missing}")
    return k


def _minimize_gamma(fun_grad, p, k, tol, max_iter, what):
    def flat(v):
        gamma = v.reshape(p, k - 1)
        value, grad = fun_grad(gamma)
        return value, grad.ravel()

    res = minimize(
        flat,
        np.zeros(p * (k - 1)),
        jac=True,
        method="L-BFGS-B",
        options=dict(maxiter=max_iter, maxfun=20 * max_iter, gtol=0.1 * tol, ftol=0.0),
    )
    gamma = res.x.reshape(p, k - 1)
    grad_norm = float(np.abs(fun_grad(gamma)[1]).max())
    if grad_norm > tol:
        raise OptimizationError(
            f"{what} did not converge (gradient max-norm {grad_norm:.3e})",
            grad_norm=grad_norm,
        )
    return gamma


def fit_strong_thinning(
    examples: list[Example],
    family: LevyFamily,
    ridge_lambda: float = 0.0,
    tol: float = 1e-7,
    max_iter: int = 1000,
) -> LogisticModel:
    """Minimize the summed limit loss (plus an optional ridge term) over
    centered coefficients.  Only the Gaussian and Poisson families have a
    derived conditional jump law, so only they are accepted.

    Gaussian reduces to a quadratic program solved through the same
    optimizer; Poisson reduces to a per-word weighted logistic objective
    evaluated through aggregated class-word counts.  Internally the
    objective is divided by its number of atomic loss terms (examples for
    Gaussian, total counts for Poisson) - the argmin is unchanged and the
    gradient tolerance applies at unit scale instead of count scale.
    """
    if ridge_lambda < 0.0:
        raise ParameterError("ridge_lambda must be nonnegative")
    if len(examples) == 0:
        raise DegenerateDataError("no examples")
    k = _labels_and_k(examples)
    p = family.d

    if family.kind is FamilyKind.GAUSSIAN:
        sigma = family.sigma
        s_class = np.zeros((p, k))
        for ex in examples:
            s_class[:, ex.y - 1] += np.asarray(ex.x, dtype=float)
        t_total = float(sum(ex.t for ex in examples))
        scale = float(len(examples))

        def fun_grad(gamma):
            beta = _expand(gamma)
            sigma_beta = sigma @ beta
            value = (
                -float((s_class * beta).sum())
                + 0.5 * t_total / k * float((beta * sigma_beta).sum())
                + 0.5 * ridge_lambda * float((beta**2).sum())
            )
            grad = -s_class + (t_total / k) * sigma_beta + ridge_lambda * beta
            return value / scale, _contract(grad) / scale

    elif family.kind is FamilyKind.POISSON:
        counts = np.zeros((p, k))
        for ex in examples:
            counts[:, ex.y - 1] += np.asarray(ex.x, dtype=float)
        totals = counts.sum(axis=1)
        scale = max(1.0, float(totals.sum()))

        def fun_grad(gamma):
            beta = _expand(gamma)
            lse = logsumexp(beta, axis=1)
            value = (
                float(totals @ lse)
                - float((counts * beta).sum())
                + 0.5 * ridge_lambda * float((beta**2).sum())
            )
            soft = np.exp(beta - lse[:, None])
            grad = totals[:, None] * soft - counts + ridge_lambda * beta
            return value / scale, _contract(grad) / scale

    else:
        raise ParameterError(
            f"no derived strong-thinning law for the {family.kind.value} family"
        )

    gamma = _minimize_gamma(fun_grad, p, k, tol, max_iter, "strong-thinning fit")
    beta = center_columns(_expand(gamma))
    return LogisticModel(beta=beta, feature_map=FeatureMap.IDENTITY)


# --------------------------------------------------------------------------
# Path diagnostics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphaPathPoint:
    alpha: float
    direction_distance: float


def _unit_direction(beta: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(beta))
    if norm == 0.0:
        raise DegenerateDataError("fitted coefficients are identically zero")
    return beta / norm


def alpha_path_converges(
    examples: list[Example],
    family: LevyFamily,
    alphas: list[float],
    n_pseudo: int,
    ridge_lambda: float = 0.0,
    seed: RngState = RngState(0),
    tol: float = 1e-7,
    max_iter: int = 1000,
) -> list[AlphaPathPoint]:
    """Distance between the thinned-fit direction and the limit direction
    along an alpha path.

    For each alpha, fits coefficients on ``n_pseudo`` thinned copies per
    original at a fixed ridge weight (no CV) and reports the Frobenius
    distance between the normalized coefficient matrices.  Shrinking
    alpha should shrink the distance, up to Monte Carlo noise.
    """
    limit_model = fit_strong_thinning(
        examples, family, ridge_lambda=ridge_lambda, tol=tol, max_iter=max_iter
    )
    limit_dir = _unit_direction(limit_model.beta)
    cfg_train = TrainConfig(ridge_lambda=ridge_lambda, tol=tol, max_iter=max_iter)
    out = []
    for j, alpha in enumerate(alphas):
        thin_cfg = ThinningConfig(alpha=alpha, n_pseudo=n_pseudo, seed=seed.substate(j))
        pseudo = generate_pseudo_examples(examples, thin_cfg, family)
        model = fit_logistic(pseudo, cfg_train)
        dist = float(np.linalg.norm(_unit_direction(model.beta) - limit_dir))
        out.append(AlphaPathPoint(alpha=alpha, direction_distance=dist))
    return out


# --------------------------------------------------------------------------
# Naive Bayes on Poisson counts (the generative twin of the Poisson limit)
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PoissonNaiveBayes:
    """Per-class word rates and the induced linear scores log(rate)."""

    rates: np.ndarray  # (K, d)
    scores: np.ndarray  # (K, d), log rates
    class_time: np.ndarray  # (K,), total information content per class


def naive_bayes_poisson_fit(
    examples: list[Example],
    smoothing: float = 0.0,
) -> PoissonNaiveBayes:
    """Rate estimates (count_jk + a) / (time_k + a d) with additive
    smoothing a, plus the induced log-rate scores."""
    if smoothing < 0.0:
        raise ParameterError("smoothing must be nonnegative")
    if len(examples) == 0:
        raise DegenerateDataError("no examples")
    k = _labels_and_k(examples)
    d = np.asarray(examples[0].x).shape[0]
    counts = np.zeros((k, d))
    time = np.zeros(k)
    for ex in examples:
        counts[ex.y - 1] += np.asarray(ex.x, dtype=float)
        time[ex.y - 1] += ex.t
    rates = (counts + smoothing) / (time + smoothing * d)[:, None]
    with np.errstate(divide="ignore"):
        scores = np.log(rates)
    return PoissonNaiveBayes(rates=rates, scores=scores, class_time=time)
