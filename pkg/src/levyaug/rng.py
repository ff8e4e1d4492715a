"""Reproducible random state and the distribution primitives the samplers use.

All randomness flows through :class:`RngState`, a (seed, stream) pair that
derives independent substreams by feeding the pair plus an arbitrary integer
key into ``numpy``'s ``SeedSequence``.  Substreams keyed by, say,
``(origin_id, b)`` are therefore independent of iteration order and of each
other, which is what makes pseudo-example generation reproducible under
reordering and parallelism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionError, ParameterError

__all__ = [
    "RngState",
    "sample_binomial",
    "sample_poisson",
    "sample_gamma",
    "sample_beta",
    "sample_std_normal_vector",
    "sample_mvn",
    "sample_wishart",
    "cholesky",
    "matrix_sqrt_sym_pd",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngState:
    """A named random stream: identical (seed, stream) pairs reproduce
    identical draws across runs and platforms."""

    seed: int
    stream: int = 0

    def _entropy(self, key: tuple[int, ...]) -> tuple[int, ...]:
        return (self.seed & _MASK64, self.stream & _MASK64) + tuple(k & _MASK64 for k in key)

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(entropy=self._entropy(())))

    def spawn(self, *key: int) -> np.random.Generator:
        """Generator for the substream identified by an integer key tuple."""
        return np.random.default_rng(np.random.SeedSequence(entropy=self._entropy(key)))

    def substate(self, *key: int) -> "RngState":
        """A derived RngState whose stream id folds in the given key."""
        mixed = np.random.SeedSequence(entropy=self._entropy(key)).generate_state(2, np.uint64)
        return RngState(seed=int(mixed[0]), stream=int(mixed[1]))


# --------------------------------------------------------------------------
# Scalar / vector primitives (thin wrappers so every sampler in the package
# draws through one audited surface)
# --------------------------------------------------------------------------

def sample_binomial(n, p: float, rng: np.random.Generator, size=None):
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"binomial probability must lie in [0, 1], got {p}")
    return rng.binomial(n, p, size=size)


def sample_poisson(rate, rng: np.random.Generator, size=None):
    if np.any(np.asarray(rate) < 0):
        raise ParameterError("Poisson rate must be nonnegative")
    return rng.poisson(rate, size=size)


def sample_gamma(shape, scale, rng: np.random.Generator, size=None):
    if np.any(np.asarray(shape) <= 0) or np.any(np.asarray(scale) <= 0):
        raise ParameterError("gamma shape and scale must be positive")
    return rng.gamma(shape, scale, size=size)


def sample_beta(a: float, b: float, rng: np.random.Generator, size=None):
    if a <= 0 or b <= 0:
        raise ParameterError("beta shapes must be positive")
    return rng.beta(a, b, size=size)


def sample_std_normal_vector(d: int, rng: np.random.Generator, size=None):
    shape = (d,) if size is None else (size, d)
    return rng.standard_normal(shape)


def sample_mvn(mean: np.ndarray, chol_factor: np.ndarray, rng: np.random.Generator, size=None):
    """Draw N(mean, L L') given the lower Cholesky factor L."""
    d = mean.shape[0]
    z = sample_std_normal_vector(d, rng, size=size)
    return mean + z @ chol_factor.T


# --------------------------------------------------------------------------
# Matrix primitives
# --------------------------------------------------------------------------

def cholesky(m: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"matrix is not positive-definite: {exc}") from None


def matrix_sqrt_sym_pd(m: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric positive-definite matrix."""
    w, v = np.linalg.eigh(m)
    if w.min() <= 0.0:
        raise DecompositionError("matrix has a nonpositive eigenvalue")
    return (v * np.sqrt(w)) @ v.T


def sample_wishart(scale: np.ndarray, dof: float, rng: np.random.Generator, size=None):
    """Wishart(scale, dof) draws via the Bartlett decomposition.

    Supports any real dof >= d (not just integers): the lower-triangular
    factor has chi(dof - i) diagonal entries and standard-normal strict
    lower entries, and the draw is L A A' L' with L = chol(scale).
    """
    scale = np.asarray(scale, dtype=float)
    d = scale.shape[0]
    if dof < d:
        raise ParameterError(f"Wishart dof must be >= dimension {d}, got {dof}")
    chol_scale = cholesky(scale)
    n = 1 if size is None else size
    a = np.zeros((n, d, d))
    idx = np.arange(d)
    chi2 = rng.chisquare(dof - idx, size=(n, d))
    a[:, idx, idx] = np.sqrt(chi2)
    rows, cols = np.tril_indices(d, k=-1)
    if rows.size:
        a[:, rows, cols] = rng.standard_normal((n, rows.size))
    la = chol_scale @ a
    w = la @ np.swapaxes(la, -1, -2)
    w = 0.5 * (w + np.swapaxes(w, -1, -2))
    return w[0] if size is None else w
