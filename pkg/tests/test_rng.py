import numpy as np
import pytest
from scipy import stats

from levyaug import DecompositionError, ParameterError, RngState
from levyaug.rng import (
    cholesky,
    matrix_sqrt_sym_pd,
    sample_beta,
    sample_binomial,
    sample_gamma,
    sample_mvn,
    sample_poisson,
    sample_std_normal_vector,
    sample_wishart,
)

from conftest import random_pd_matrix


def test_same_state_same_draws():
    a = RngState(7, 3).generator().standard_normal(8)
    b = RngState(7, 3).generator().standard_normal(8)
    assert np.array_equal(a, b)
    c = RngState(7, 4).generator().standard_normal(8)
    assert not np.array_equal(a, c)


def test_spawn_is_keyed_not_sequential():
    s = RngState(11)
    a1 = s.spawn(0, 0).standard_normal(4)
    b1 = s.spawn(1, 0).standard_normal(4)
    # spawning in the opposite order reproduces the same streams
    b2 = s.spawn(1, 0).standard_normal(4)
    a2 = s.spawn(0, 0).standard_normal(4)
    assert np.array_equal(a1, a2)
    assert np.array_equal(b1, b2)
    assert not np.array_equal(a1, b1)


def test_substate_derives_new_state():
    s = RngState(11)
    assert s.substate(5) == s.substate(5)
    assert s.substate(5) != s.substate(6)


def test_binomial_moments():
    g = RngState(1).generator()
    draws = sample_binomial(20, 0.3, g, size=200_000)
    assert draws.mean() == pytest.approx(6.0, abs=0.05)
    assert draws.var() == pytest.approx(20 * 0.3 * 0.7, rel=0.02)
    with pytest.raises(ParameterError):
        sample_binomial(5, 1.5, g)


def test_poisson_moments():
    g = RngState(2).generator()
    draws = sample_poisson(3.7, g, size=200_000)
    assert draws.mean() == pytest.approx(3.7, abs=0.05)
    assert draws.var() == pytest.approx(3.7, rel=0.03)


def test_gamma_against_scipy_cdf():
    g = RngState(3).generator()
    draws = sample_gamma(2.5, 1.7, g, size=20_000)
    stat = stats.kstest(draws, stats.gamma(a=2.5, scale=1.7).cdf)
    assert stat.pvalue > 0.01


def test_beta_against_scipy_cdf():
    g = RngState(4).generator()
    draws = sample_beta(0.7, 1.9, g, size=20_000)
    assert stats.kstest(draws, stats.beta(0.7, 1.9).cdf).pvalue > 0.01


def test_mvn_covariance(rng):
    cov = random_pd_matrix(3, rng)
    chol = cholesky(cov)
    g = RngState(5).generator()
    draws = sample_mvn(np.zeros(3), chol, g, size=100_000)
    emp = np.cov(draws.T)
    assert np.linalg.norm(emp - cov) / np.linalg.norm(cov) < 0.03
    assert sample_std_normal_vector(3, g).shape == (3,)


def test_wishart_mean_and_fractional_dof(rng):
    scale = random_pd_matrix(2, rng)
    g = RngState(6).generator()
    dof = 5.5
    draws = sample_wishart(scale, dof, g, size=40_000)
    mean = draws.mean(axis=0)
    assert np.linalg.norm(mean - dof * scale) / np.linalg.norm(dof * scale) < 0.02
    single = sample_wishart(scale, 2.0, g)
    assert single.shape == (2, 2)
    with pytest.raises(ParameterError):
        sample_wishart(scale, 1.5, g)


def test_wishart_matches_scipy_distribution():
    g = RngState(7).generator()
    draws = sample_wishart(np.eye(1), 4.0, g, size=20_000)[:, 0, 0]
    assert stats.kstest(draws, stats.chi2(df=4).cdf).pvalue > 0.01


def test_matrix_sqrt_and_cholesky_errors(rng):
    m = random_pd_matrix(4, rng)
    root = matrix_sqrt_sym_pd(m)
    assert np.allclose(root @ root, m, atol=1e-10)
    assert np.allclose(root, root.T, atol=1e-12)
    with pytest.raises(DecompositionError):
        matrix_sqrt_sym_pd(np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(DecompositionError):
        cholesky(np.array([[0.0, 1.0], [1.0, 0.0]]))
