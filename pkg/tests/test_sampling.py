import math

import numpy as np
import pytest

from geogossip.errors import DegeneratePolicyError, InvalidParameterError
from geogossip.sampling import (
    RejectionPolicy,
    decide_accept,
    distance_to_uniform,
    expected_queries,
    induced_distribution,
    policy_always,
    policy_fixed_tau,
    policy_quantile,
)
from geogossip.topology import build_rgg, default_radius, voronoi_areas


def _rgg_areas(n, seed):
    return voronoi_areas(build_rgg(n, default_radius(n), seed)).areas


# ---------------------------------------------------------------- fixed tau

def test_fixed_uniform_areas():
    p = policy_fixed_tau(np.full(10, 0.1), 0.1)
    assert p.tau == pytest.approx(0.01)
    np.testing.assert_allclose(p.accept, 0.1)
    assert p.total_acceptance == pytest.approx(0.1)


def test_fixed_three_areas():
    p = policy_fixed_tau([0.5, 0.3, 0.2], 0.2)
    assert p.tau == pytest.approx(0.2 / 3)
    np.testing.assert_allclose(p.accept, [2 / 15, 2 / 9, 1 / 3], rtol=1e-12)
    assert p.total_acceptance == pytest.approx(0.2)


@pytest.mark.parametrize("c", [0.3, 0.25, 0.0, -0.1])
def test_fixed_bad_c(c):
    with pytest.raises(InvalidParameterError):
        policy_fixed_tau([0.5, 0.5], c)


# ----------------------------------------------------------------- quantile

def test_quantile_four_areas():
    assert policy_quantile([0.4, 0.1, 0.3, 0.2], mu=1, nu=0.5).tau == 0.2


def test_quantile_uniform_areas():
    p = policy_quantile(np.full(8, 1 / 8), mu=0.3, nu=0.2)
    assert p.tau == 1 / 8
    assert np.all(p.accept == 1.0)
    assert p.total_acceptance == pytest.approx(1.0)


def test_quantile_smallest_when_p_tiny():
    assert policy_quantile([0.4, 0.1, 0.3, 0.2], mu=0.01, nu=0.01).tau == 0.1


@pytest.mark.parametrize("mu,nu", [(0, 0.1), (0.1, 0), (-1, 0.1)])
def test_quantile_bad_params(mu, nu):
    with pytest.raises(InvalidParameterError):
        policy_quantile([0.5, 0.5], mu, nu)


@pytest.mark.parametrize("seed", range(10))
def test_policy_invariants(seed):
    a = _rgg_areas(200, seed)
    for p in (policy_quantile(a, 0.1, 0.1), policy_fixed_tau(a, 0.1), policy_always(a)):
        assert np.all((p.accept > 0) & (p.accept <= 1))
        assert np.array_equal(p.accept == 1.0, a <= p.tau)
        assert p.total_acceptance == pytest.approx(float(np.sum(a * p.accept)), rel=1e-12)
        q = induced_distribution(p, a).q
        assert abs(q.sum() - 1) <= 1e-12 and np.all(q >= 0)


@pytest.mark.parametrize("seed", range(20))
def test_quantile_caps(seed):
    a = _rgg_areas(300, seed)
    mu = nu = 0.1
    q = induced_distribution(policy_quantile(a, mu, nu), a).q
    n = len(a)
    assert q.max() <= (1 + mu) / n
    assert np.sum(q < 1 / n) <= math.ceil(nu * n)


# ----------------------------------------------------------------- induced q

def test_induced_uniform():
    a = np.full(5, 0.2)
    np.testing.assert_allclose(induced_distribution(policy_always(a), a).q, 0.2)


def test_induced_three():
    a = [0.5, 0.3, 0.2]
    p = RejectionPolicy.from_threshold(a, 0.25)
    np.testing.assert_allclose(induced_distribution(p, a).q, [0.25 / 0.7, 0.25 / 0.7, 0.2 / 0.7], rtol=1e-12)


def test_induced_no_tempering():
    a = np.array([0.5, 0.3, 0.2])
    np.testing.assert_allclose(induced_distribution(policy_always(a), a).q, a, rtol=1e-12)


# ------------------------------------------------------- distance to uniform

def test_distance_examples():
    assert distance_to_uniform(np.full(4, 0.25)) == (0.0, 0.0)
    l1, l2 = distance_to_uniform([1.0, 0.0])
    assert l1 == pytest.approx(1.0) and l2 == pytest.approx(1 / math.sqrt(2))


@pytest.mark.parametrize("seed", range(10))
def test_distance_bounds_on_rgg(seed):
    a = _rgg_areas(100, seed)
    mu = nu = 0.1
    l1, l2 = distance_to_uniform(induced_distribution(policy_quantile(a, mu, nu), a))
    assert l1 <= mu + nu
    assert l2 <= math.sqrt(nu + mu**2) / math.sqrt(len(a))


# ----------------------------------------------------------- expected queries

def test_expected_queries_values():
    assert expected_queries(RejectionPolicy.from_threshold([0.5, 0.5], 0.5)) == 1.0
    assert expected_queries(RejectionPolicy.from_threshold([0.5, 0.5], 0.25)) == 2.0


def test_expected_queries_zero():
    p = RejectionPolicy(tau=1.0, accept=np.ones(2), total_acceptance=0.0)
    with pytest.raises(DegeneratePolicyError):
        expected_queries(p)


@pytest.mark.parametrize("seed", range(5))
def test_expected_queries_bound(seed):
    a = _rgg_areas(200, seed)
    p = policy_fixed_tau(a, 0.1)
    nu_hat = np.mean(a <= p.tau)
    assert expected_queries(p) <= 1 / ((1 - nu_hat) * 0.1)


# ------------------------------------------------------------- accept draws

def test_accept_always():
    p = policy_always([0.5, 0.5])
    rng = np.random.default_rng(0)
    assert all(decide_accept(p, 1, rng) for _ in range(1000))


def test_accept_half():
    p = RejectionPolicy.from_threshold([0.5, 0.5], 0.25)
    rng = np.random.default_rng(123)
    hits = sum(decide_accept(p, 0, rng) for _ in range(10**6))
    assert abs(hits / 10**6 - 0.5) <= 0.002


def test_accept_reproducible():
    p = RejectionPolicy.from_threshold([0.5, 0.3, 0.2], 0.1)
    a = [decide_accept(p, i % 3, np.random.default_rng(5)) for i in range(50)]
    b = [decide_accept(p, i % 3, np.random.default_rng(5)) for i in range(50)]
    assert a == b
    rng1, rng2 = np.random.default_rng(5), np.random.default_rng(5)
    assert [decide_accept(p, 0, rng1) for _ in range(200)] == [decide_accept(p, 0, rng2) for _ in range(200)]


# ------------------------------------------------- fraction above threshold

def test_fixed_tau_mostly_above_threshold():
    seeds = 50
    for c in (0.05, 0.1, 0.2):
        ok = 0
        for seed in range(seeds):
            a = _rgg_areas(500, seed)
            ok += np.mean(a > c / len(a)) >= 1 - 4 * c
        assert ok >= 0.95 * seeds
