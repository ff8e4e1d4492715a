import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levyaug import (
    Example,
    FamilyKind,
    LevyFamily,
    ParameterError,
    SupportError,
    Topic,
    check_example,
    check_features,
    gamma_family,
    gaussian_family,
    log_partition,
    poisson_family,
    thinning_density_normalized,
    thinning_log_density,
    wishart_family,
)

from conftest import random_pd_matrix


# ---------------------------------------------------------------------------
# family / type invariants
# ---------------------------------------------------------------------------

def test_gaussian_family_requires_sigma():
    with pytest.raises(ParameterError):
        LevyFamily(FamilyKind.GAUSSIAN, 2)
    with pytest.raises(ParameterError):
        LevyFamily(FamilyKind.POISSON, 2, sigma=np.eye(2))
    with pytest.raises(ParameterError):
        gaussian_family(2, np.array([[1.0, 2.0], [2.0, 1.0]]))  # not PD


def test_dimension_must_be_positive():
    with pytest.raises(ParameterError):
        poisson_family(0)


def test_topic_domain_enforced_at_construction():
    with pytest.raises(ParameterError):
        Topic(np.array([-0.5, 0.1]), gamma_family(2))
    Topic(np.array([-0.5, -0.1]), gamma_family(2))
    with pytest.raises(ParameterError):
        Topic(np.eye(2), wishart_family(2))  # positive-definite, wrong sign
    Topic(-np.eye(2), wishart_family(2))


def test_topic_unit_rate_mass_flag():
    theta = np.log(np.array([0.2, 0.8]))
    Topic(theta, poisson_family(2), unit_rate_mass=True)
    with pytest.raises(ParameterError):
        Topic(np.zeros(2), poisson_family(2), unit_rate_mass=True)


def test_feature_support_checks():
    assert check_features(poisson_family(2), [1, 0]).dtype == np.int64
    with pytest.raises(SupportError):
        check_features(poisson_family(2), [1, -1])
    with pytest.raises(SupportError):
        check_features(poisson_family(2), [1.5, 0])
    with pytest.raises(SupportError):
        check_features(gamma_family(2), [1.0, 0.0])
    with pytest.raises(SupportError):
        check_features(wishart_family(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    check_features(wishart_family(2), np.eye(2))


def test_wishart_example_needs_t_at_least_d():
    fam = wishart_family(3)
    with pytest.raises(SupportError):
        check_example(fam, Example(x=np.eye(3), y=1, t=2.0))
    check_example(fam, Example(x=np.eye(3), y=1, t=3.0))


def test_example_fields_are_frozen():
    ex = Example(x=np.array([1.0, 2.0]), y=1, t=1.0)
    with pytest.raises(ValueError):
        ex.x[0] = 5.0


# ---------------------------------------------------------------------------
# log_partition
# ---------------------------------------------------------------------------

def test_log_partition_poisson_zeros_is_d():
    for d in (1, 3, 7):
        assert log_partition(Topic(np.zeros(d), poisson_family(d))) == pytest.approx(d)


def test_log_partition_gaussian_zero_theta():
    assert log_partition(Topic(np.zeros(2), gaussian_family(2))) == 0.0


def test_log_partition_gamma_unit_variance():
    # sigma^2 = 1 corresponds to theta = -1/2 and psi = 0
    assert log_partition(Topic(np.array([-0.5]), gamma_family(1))) == pytest.approx(0.0)


@pytest.mark.parametrize("kind", ["poisson", "gaussian", "gamma", "wishart"])
def test_log_partition_convex_on_random_pairs(kind, rng):
    for _ in range(100):
        if kind == "poisson":
            fam = poisson_family(3)
            t1, t2 = rng.normal(size=3), rng.normal(size=3)
        elif kind == "gaussian":
            fam = gaussian_family(3, random_pd_matrix(3, rng))
            t1, t2 = rng.normal(size=3), rng.normal(size=3)
        elif kind == "gamma":
            fam = gamma_family(3)
            t1, t2 = -rng.uniform(0.1, 5.0, size=3), -rng.uniform(0.1, 5.0, size=3)
        else:
            fam = wishart_family(2)
            t1, t2 = -random_pd_matrix(2, rng), -random_pd_matrix(2, rng)
        mid = log_partition(Topic((t1 + t2) / 2.0, fam))
        avg = 0.5 * (log_partition(Topic(t1, fam)) + log_partition(Topic(t2, fam)))
        assert mid <= avg + 1e-9


# ---------------------------------------------------------------------------
# thinning density
# ---------------------------------------------------------------------------

def test_poisson_kernel_single_coordinate_values():
    fam = poisson_family(1)
    assert thinning_log_density(fam, [2], [1], 1.0, 0.5) == pytest.approx(math.log(0.5))
    assert thinning_log_density(fam, [3], [3], 1.0, 0.5) == pytest.approx(math.log(0.125))


def test_gamma_kernel_is_arcsine_at_half():
    fam = gamma_family(1)
    got = thinning_log_density(fam, [1.0], [0.5], 2.0, 0.5)
    assert got == pytest.approx(math.log(1.0 / (math.pi * 0.5)), abs=1e-12)


def test_gaussian_kernel_matches_normal_logpdf(rng):
    from scipy.stats import multivariate_normal

    sigma = random_pd_matrix(2, rng)
    fam = gaussian_family(2, sigma)
    x = rng.normal(size=2)
    xt = rng.normal(size=2)
    t, alpha = 3.0, 0.3
    ref = multivariate_normal(
        mean=alpha * x, cov=alpha * (1 - alpha) * t * sigma
    ).logpdf(xt)
    assert thinning_log_density(fam, x, xt, t, alpha) == pytest.approx(ref, abs=1e-10)


def test_alpha_bounds_rejected():
    fam = poisson_family(1)
    for alpha in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ParameterError):
            thinning_log_density(fam, [2], [1], 1.0, alpha)


def test_kernel_support_violations():
    with pytest.raises(SupportError):
        thinning_log_density(poisson_family(1), [2], [3], 1.0, 0.5)
    with pytest.raises(SupportError):
        thinning_log_density(gamma_family(1), [1.0], [1.0], 2.0, 0.5)
    with pytest.raises(SupportError):
        thinning_log_density(wishart_family(2), np.eye(2), 2.0 * np.eye(2), 5.0, 0.5)


def test_poisson_kernel_theta_free_and_equal_to_binomials():
    # carrier-ratio route vs direct binomial pmfs, small exhaustive slice
    fam = poisson_family(2)
    for x in itertools.product(range(4), repeat=2):
        if sum(x) == 0:
            continue
        for alpha in (0.25, 0.5, 0.75):
            for xt in itertools.product(*(range(v + 1) for v in x)):
                ref = sum(
                    math.log(math.comb(n, k)) + k * math.log(alpha) + (n - k) * math.log(1 - alpha)
                    for n, k in zip(x, xt)
                )
                got = thinning_log_density(fam, list(x), list(xt), 7.3, alpha)
                assert got == pytest.approx(ref, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    counts=st.lists(st.integers(min_value=0, max_value=5), min_size=1, max_size=3),
    alpha=st.floats(min_value=0.05, max_value=0.95),
)
def test_poisson_kernel_normalizes(counts, alpha):
    fam = poisson_family(len(counts))
    total = 0.0
    for xt in itertools.product(*(range(c + 1) for c in counts)):
        total += math.exp(thinning_log_density(fam, counts, list(xt), 2.0, alpha))
    assert total == pytest.approx(1.0, abs=1e-10)


def test_normalization_flag():
    assert thinning_density_normalized(poisson_family(1))
    assert thinning_density_normalized(gamma_family(1))
    assert not thinning_density_normalized(wishart_family(2))


def test_wishart_kernel_ratio_consistency(rng):
    # unnormalized values must still order draws consistently with the
    # defining carrier ratio: shifting to a different x_tilde changes the
    # log-density by the same amount regardless of the dropped constant
    fam = wishart_family(2)
    x = random_pd_matrix(2, rng)
    a = 0.35 * x
    b = 0.55 * x
    t, alpha = 9.0, 0.5
    diff = thinning_log_density(fam, x, a, t, alpha) - thinning_log_density(
        fam, x, b, t, alpha
    )
    def raw(xt):
        s1, l1 = np.linalg.slogdet(xt)
        s2, l2 = np.linalg.slogdet(x - xt)
        assert s1 > 0 and s2 > 0
        return 0.5 * (alpha * t - 3.0) * l1 + 0.5 * ((1 - alpha) * t - 3.0) * l2

    assert diff == pytest.approx(raw(a) - raw(b), abs=1e-10)
