import math

import numpy as np
import pytest

from geogossip.errors import InvalidMatrixError, InvalidSizeError, InvalidTopologyError, NoSpectralGapError
from geogossip.sampling import induced_distribution, policy_quantile
from geogossip.spectral import (
    build_W,
    closed_form_complete_lambda2,
    closed_form_cycle_lambda2,
    lambda2,
    predicted_rounds,
    selection_geographic,
    selection_standard,
    theorem1_gap_certificate,
    walk_lambda2,
)
from geogossip.topology import build_cycle, build_grid, build_rgg, default_radius, rgg_from_positions, voronoi_areas


def _circulant(first):
    n = len(first)
    return np.array([np.roll(first, i) for i in range(n)])


def _uniform(n):
    return np.full(n, 1.0 / n)


# ------------------------------------------------------------ selection

def test_selection_cycle4():
    np.testing.assert_array_equal(selection_standard(build_cycle(4)), _circulant([0, 0.5, 0, 0.5]))


def test_selection_grid4():
    P = selection_standard(build_grid(4))
    assert all(sorted(row[row > 0]) == [0.5, 0.5] for row in P)


def test_selection_star():
    t = rgg_from_positions([(0.5, 0.5), (0.5, 0.6), (0.6, 0.5), (0.4, 0.5)], 0.15)
    np.testing.assert_allclose(selection_standard(t)[0], [0, 1 / 3, 1 / 3, 1 / 3])


def test_selection_isolated():
    with pytest.raises(InvalidTopologyError):
        selection_standard(rgg_from_positions([(0.1, 0.1), (0.9, 0.9)], 0.1))


def test_selection_geographic():
    P = selection_geographic(_uniform(3))
    np.testing.assert_array_equal(P, np.full((3, 3), 1 / 3))
    q = np.array([0.2, 0.3, 0.5])
    assert all(np.array_equal(row, q) for row in selection_geographic(q))


def test_cycle_overlay_is_complete_graph():
    n = 12
    q = induced_distribution(policy_quantile(voronoi_areas(build_cycle(n)).areas, 0.1, 0.1),
                             voronoi_areas(build_cycle(n)))
    np.testing.assert_allclose(selection_geographic(q), np.full((n, n), 1 / n), atol=1e-15)


# ------------------------------------------------------------------- W

def test_W_two_nodes():
    # substitution: I + ([[0, 2], [2, 0]] - 2I) / 4; every round averages the forced pair
    W = build_W([[0, 1], [1, 0]])
    np.testing.assert_allclose(W.D, [2, 2])
    np.testing.assert_allclose(W.W, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
    assert lambda2(W) == pytest.approx(0.0, abs=1e-12)


def test_W_cycle4_circulant():
    n = 4
    W = build_W(selection_standard(build_cycle(n))).W
    np.testing.assert_allclose(W, _circulant([1 - 1 / n, 1 / (2 * n), 0, 1 / (2 * n)]), atol=1e-15)


@pytest.mark.parametrize("P", [
    selection_standard(build_grid(16)),
    selection_standard(build_rgg(60, 0.4, 3)),
    selection_geographic(np.random.default_rng(0).dirichlet(np.ones(30))),
], ids=["grid", "rgg", "dirichlet"])
def test_W_doubly_stochastic(P):
    W = build_W(P).W
    np.testing.assert_allclose(W, W.T, atol=1e-10)
    np.testing.assert_allclose(W @ np.ones(len(W)), 1, atol=1e-10)
    np.testing.assert_allclose(np.ones(len(W)) @ W, 1, atol=1e-10)
    assert np.linalg.eigvalsh(W)[-1] == pytest.approx(1.0, abs=1e-10)


def test_W_rejects_non_stochastic():
    with pytest.raises(InvalidMatrixError):
        build_W([[0.5, 0.4], [0.5, 0.5]])
    with pytest.raises(InvalidMatrixError):
        build_W([[1.0, 0.0, 0.0]])


def test_lambda2_rejects_asymmetric():
    with pytest.raises(InvalidMatrixError):
        lambda2(np.array([[0.5, 0.5], [0.1, 0.9]]))


# ------------------------------------------------------------- closed forms

def test_cycle_closed_form_values():
    assert closed_form_cycle_lambda2(4) == pytest.approx(0.75, abs=1e-15)
    assert closed_form_cycle_lambda2(10**6) == pytest.approx(1.0, abs=1e-5)
    assert lambda2(build_W(selection_standard(build_cycle(4)))) == pytest.approx(0.75, abs=1e-12)


def test_cycle_closed_form_matches_eigensolve():
    assert abs(closed_form_cycle_lambda2(8) - lambda2(build_W(selection_standard(build_cycle(8))))) <= 1e-9


def test_cycle_closed_form_small_n():
    with pytest.raises(InvalidSizeError):
        closed_form_cycle_lambda2(2)


def test_complete_closed_form_values():
    assert closed_form_complete_lambda2(2) == 0.75
    assert closed_form_complete_lambda2(10) == pytest.approx(0.91, abs=1e-15)
    with pytest.raises(InvalidSizeError):
        closed_form_complete_lambda2(1)


def test_complete_overlay_n10():
    """Eigensolve of the uniform overlay at n=10, compared with the quoted 0.91."""
    assert lambda2(build_W(selection_geographic(_uniform(10)))) == pytest.approx(0.91, abs=1e-9)


def test_complete_overlay_n2():
    # cross-check of the quoted formula against the eigensolve of the uniform overlay
    assert lambda2(build_W(selection_geographic(_uniform(2)))) == pytest.approx(closed_form_complete_lambda2(2), abs=1e-9)


@pytest.mark.parametrize("n", [4, 8, 16, 32, 64, 128])
def test_complete_closed_form_matches_eigensolve(n):
    assert abs(closed_form_complete_lambda2(n) - lambda2(build_W(selection_geographic(_uniform(n))))) <= 1e-9


@pytest.mark.parametrize("n", [4, 16, 64, 128])
def test_complete_overlay_exact_eigenvalue(n):
    """The uniform overlay is (1 - 1/n) I + 11^T / n^2, whose second eigenvalue is 1 - 1/n."""
    assert lambda2(build_W(selection_geographic(_uniform(n)))) == pytest.approx(1 - 1 / n, abs=1e-12)


# ------------------------------------------------------------------- gaps

@pytest.mark.parametrize("n", [8, 16, 32, 64, 128, 256])
def test_cycle_gap_cubic(n):
    gap = 1 - lambda2(build_W(selection_standard(build_cycle(n))))
    assert math.pi**2 <= gap * n**3 <= 4 * math.pi**2


@pytest.mark.parametrize("n", [8, 32, 128])
def test_complete_overlay_gap(n):
    gap = 1 - lambda2(build_W(selection_geographic(_uniform(n))))
    assert gap == pytest.approx(1 / n - 1 / n**2, abs=1e-12)


@pytest.mark.parametrize("n", [16, 64, 256])
def test_grid_walk_gap_linear(n):
    gap = 1 - walk_lambda2(selection_standard(build_grid(n)))
    assert 0.5 <= gap * n <= 50


def test_lambda2_in_unit_interval_connected():
    for seed in range(5):
        t = build_rgg(80, default_radius(80), seed)
        lam = lambda2(build_W(selection_standard(t)))
        assert 0 <= lam < 1


# -------------------------------------------------------- predicted rounds

def test_predicted_rounds_values():
    assert predicted_rounds(1 / math.e, 1 / math.e) == pytest.approx(1.0, abs=1e-15)
    assert predicted_rounds(0.75, 0.01) == pytest.approx(16.0078, abs=1e-4)
    assert predicted_rounds(0.5, 1.0) == 0.0


def test_predicted_rounds_no_gap():
    with pytest.raises(NoSpectralGapError):
        predicted_rounds(1.0, 0.1)


# ------------------------------------------------------------- certificate

def test_certificate_uniform():
    assert theorem1_gap_certificate(_uniform(50)) == pytest.approx(1 - 1 / 100, abs=1e-15)


def test_certificate_value():
    n = 100
    d = np.zeros(n)
    d[0], d[1] = 0.01 / math.sqrt(2), -0.01 / math.sqrt(2)  # ||d||_2 = 0.1 / sqrt(100)
    assert theorem1_gap_certificate(_uniform(n) + d) == pytest.approx(0.996, abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_certificate_bounds_lambda2(seed):
    t = build_rgg(150, default_radius(150), seed)
    a = voronoi_areas(t)
    q = induced_distribution(policy_quantile(a, 0.1, 0.1), a).q
    W = build_W(selection_geographic(q)).W
    n = len(q)
    cert = theorem1_gap_certificate(q)
    assert cert >= lambda2(W) - 1 / n**2
    assert cert >= np.linalg.eigvalsh(W - np.ones((n, n)) / n**2)[-1]
