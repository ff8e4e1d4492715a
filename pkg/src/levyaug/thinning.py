"""Exact samplers for the thinning kernel of each family.

Given an observed slice ``x`` at time ``t`` and a fraction ``alpha``, each
sampler draws ``x_tilde`` from the conditional law of the earlier slice
``A_{alpha t}`` given ``A_t = x``:

* Poisson:  componentwise Binomial(x_j, alpha); needs neither theta nor t.
* Gaussian: N(alpha x, alpha (1 - alpha) t Sigma); needs t.
* Gamma:    x_tilde_j = m_j x_j with m_j ~ Beta(alpha t / 2, (1-alpha) t / 2).
* Wishart:  x^{1/2} M x^{1/2} with matrix-beta noise M built from two
  independent identity-scale Wisharts with alpha t and (1 - alpha) t
  degrees of freedom.  Both degrees of freedom must be >= d.

``alpha = 1`` always short-circuits to identity thinning.  Every draw is
checked against the domination invariants (thinned features stay inside
the support bracket defined by the original).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SupportError
from .families import (
    Example,
    FamilyKind,
    LevyFamily,
    PseudoExample,
    check_example,
)
from .rng import (
    RngState,
    cholesky,
    matrix_sqrt_sym_pd,
    sample_beta,
    sample_binomial,
    sample_std_normal_vector,
    sample_wishart,
)

__all__ = [
    "ThinningConfig",
    "thin_poisson",
    "thin_gaussian",
    "thin_gamma",
    "thin_wishart",
    "generate_pseudo_examples",
]

# Beta draws with a tiny shape parameter can underflow to exactly 0.0 (or
# round to 1.0); clamp into the open interval so strict domination holds.
_OPEN_LO = np.finfo(float).tiny
_OPEN_HI = 1.0 - np.finfo(float).epsneg


@dataclass(frozen=True)
class ThinningConfig:
    """How to turn originals into pseudo-examples: thinning fraction
    ``alpha`` in (0, 1] (1 = identity), ``n_pseudo`` copies per original,
    and the random state the per-origin substreams derive from."""

    alpha: float
    n_pseudo: int
    seed: RngState

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.n_pseudo < 1:
            raise ParameterError(f"n_pseudo must be >= 1, got {self.n_pseudo}")


def _check_alpha(alpha: float) -> bool:
    """Validate alpha in (0, 1]; returns True when thinning is the identity."""
    if not 0.0 < alpha <= 1.0:
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    return alpha == 1.0


def thin_poisson(x, alpha: float, rng: np.random.Generator, size=None):
    """Binomially downsample a count vector; keeps each unit with prob alpha."""
    x = np.asarray(x)
    if np.any(x < 0) or np.any(x != np.floor(x)):
        raise SupportError("Poisson thinning requires nonnegative integer counts")
    x = np.asarray(x, dtype=np.int64)
    if _check_alpha(alpha):
        return x.copy() if size is None else np.broadcast_to(x, (size,) + x.shape).copy()
    shape = None if size is None else (size,) + x.shape
    out = sample_binomial(x, alpha, rng, size=shape)
    assert np.all(out >= 0) and np.all(out <= x)
    return out


def thin_gaussian(x, alpha: float, t: float, sigma, rng: np.random.Generator, size=None):
    """Rewind a Gaussian slice: alpha x plus N(0, alpha (1-alpha) t Sigma) noise."""
    x = np.asarray(x, dtype=float)
    if t <= 0.0:
        raise ParameterError(f"Gaussian thinning requires t > 0, got {t}")
    if _check_alpha(alpha):
        return x.copy() if size is None else np.broadcast_to(x, (size,) + x.shape).copy()
    chol = cholesky(np.asarray(sigma, dtype=float))
    scale = np.sqrt(alpha * (1.0 - alpha) * t)
    z = sample_std_normal_vector(x.shape[0], rng, size=size)
    return alpha * x + scale * (z @ chol.T)


def thin_gamma(x, alpha: float, t: float, rng: np.random.Generator, size=None):
    """Multiplicative beta noise: x_tilde_j = m_j x_j, m_j ~ Beta(at/2, (1-a)t/2)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise SupportError("Gamma thinning requires strictly positive features")
    if t <= 0.0:
        raise ParameterError(f"Gamma thinning requires t > 0, got {t}")
    if _check_alpha(alpha):
        return x.copy() if size is None else np.broadcast_to(x, (size,) + x.shape).copy()
    shape = x.shape if size is None else (size,) + x.shape
    m = sample_beta(0.5 * alpha * t, 0.5 * (1.0 - alpha) * t, rng, size=shape)
    m = np.clip(m, _OPEN_LO, _OPEN_HI)
    out = m * x
    assert np.all(out > 0.0) and np.all(out < x)
    return out


def _clamped_dof(dof: float, d: int, t: float) -> float | None:
    """Degrees of freedom for one increment, tolerating the float error of
    products like (1 - alpha) * t landing a hair under the boundary d."""
    if dof >= d:
        return dof
    if dof >= d - 1e-9 * max(1.0, t):
        return float(d)
    return None


def _assert_pd(m: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(m)
        return True
    except np.linalg.LinAlgError:
        return False


def thin_wishart(x, alpha: float, t: float, rng: np.random.Generator, size=None):
    """Matrix-beta thinning of a scatter matrix.

    Draws W1 ~ Wishart(I, alpha t) and W2 ~ Wishart(I, (1-alpha) t)
    independently, forms M = (W1+W2)^{-1/2} W1 (W1+W2)^{-1/2} and returns
    x^{1/2} M x^{1/2}.  Because the conditional law of the earlier slice
    given the sum does not depend on the scale matrix, the identity-scale
    construction is exact for every underlying covariance.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if x.shape != (d, d) or not np.allclose(x, x.T, atol=1e-10):
        raise SupportError("Wishart thinning expects a symmetric matrix")
    if not _assert_pd(x):
        raise SupportError("Wishart thinning expects a positive-definite matrix")
    if _check_alpha(alpha):
        return x.copy() if size is None else np.broadcast_to(x, (size,) + x.shape).copy()
    if t < d:
        raise ParameterError(f"Wishart thinning requires t >= d, got t={t}, d={d}")
    dof1 = _clamped_dof(alpha * t, d, t)
    dof2 = _clamped_dof((1.0 - alpha) * t, d, t)
    if dof1 is None or dof2 is None:
        raise ParameterError(
            "both alpha*t and (1-alpha)*t must be >= d so the two increments "
            f"have valid degrees of freedom (t={t}, alpha={alpha}, d={d})"
        )
    n = 1 if size is None else size
    w1 = sample_wishart(np.eye(d), dof1, rng, size=n)
    w2 = sample_wishart(np.eye(d), dof2, rng, size=n)
    root_x = matrix_sqrt_sym_pd(x)
    w, v = np.linalg.eigh(w1 + w2)
    inv_root_s = np.einsum("nij,nj,nkj->nik", v, 1.0 / np.sqrt(w), v)
    m = inv_root_s @ w1 @ inv_root_s
    out = root_x @ m @ root_x
    out = 0.5 * (out + np.swapaxes(out, -1, -2))
    assert np.all(np.linalg.eigvalsh(out)[:, 0] > 0.0)
    assert np.all(np.linalg.eigvalsh(x - out)[:, 0] > 0.0)
    return out[0] if size is None else out


def _thin_example(family: LevyFamily, ex: Example, alpha: float, rng) -> np.ndarray:
    kind = family.kind
    if kind is FamilyKind.POISSON:
        return thin_poisson(ex.x, alpha, rng)
    if kind is FamilyKind.GAUSSIAN:
        return thin_gaussian(ex.x, alpha, ex.t, family.sigma, rng)
    if kind is FamilyKind.GAMMA:
        return thin_gamma(ex.x, alpha, ex.t, rng)
    return thin_wishart(ex.x, alpha, ex.t, rng)


def generate_pseudo_examples(
    examples: list[Example],
    cfg: ThinningConfig,
    family: LevyFamily,
) -> list[PseudoExample]:
    """Draw ``cfg.n_pseudo`` thinned copies of every example.

    Each copy is tagged with the index of its origin, and the draws for
    origin ``i``, copy ``b`` come from the substream keyed by ``(i, b)``,
    so the output is deterministic in ``cfg.seed`` and the draws attached
    to one origin do not depend on the rest of the batch.
    """
    alpha = cfg.alpha
    for i, ex in enumerate(examples):
        check_example(family, ex)
        if family.kind is FamilyKind.WISHART and alpha < 1.0:
            if (
                _clamped_dof(alpha * ex.t, family.d, ex.t) is None
                or _clamped_dof((1.0 - alpha) * ex.t, family.d, ex.t) is None
            ):
                raise ParameterError(
                    f"example {i}: alpha*t and (1-alpha)*t must both be >= d "
                    f"for Wishart thinning (t={ex.t}, alpha={alpha}, d={family.d})"
                )
    out: list[PseudoExample] = []
    for i, ex in enumerate(examples):
        for b in range(cfg.n_pseudo):
            if alpha == 1.0:
                x_tilde = np.asarray(ex.x).copy()
            else:
                x_tilde = _thin_example(family, ex, alpha, cfg.seed.spawn(i, b))
            out.append(
                PseudoExample(
                    x_tilde=x_tilde,
                    y=ex.y,
                    origin_id=i,
                    alpha=alpha,
                    t_tilde=alpha * ex.t,
                )
            )
    return out
