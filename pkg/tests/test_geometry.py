import numpy as np
import pytest

from banditlab.env import derive_stream
from banditlab.geometry import (
    doptimal_design,
    madow_inclusion_probabilities,
    madow_sample,
    mvee,
    project_capped_simplex_negent,
    project_capped_simplex_potential,
    sample_sphere,
)
from banditlab.mirror import exp_potential, power_potential


def test_sample_sphere_unit_norm():
    rng = derive_stream(1, 0)
    for d in (1, 2, 5):
        for _ in range(100):
            v = sample_sphere(d, rng)
            assert abs(np.linalg.norm(v) - 1.0) <= 1e-12


def test_sample_sphere_one_dimensional_signs():
    rng = derive_stream(2, 0)
    draws = np.array([sample_sphere(1, rng)[0] for _ in range(500)])
    assert set(np.unique(draws)) == {-1.0, 1.0}
    assert 0.3 < np.mean(draws > 0) < 0.7


def test_sample_sphere_symmetry():
    rng = derive_stream(3, 0)
    total = np.zeros(3)
    n = 10**5
    for _ in range(n):
        total += sample_sphere(3, rng)
    assert np.abs(total / n).max() < 0.02


def test_mvee_cross_polytope_is_unit_ball():
    pts = np.vstack([np.eye(3), -np.eye(3)])
    E, weights = mvee(pts, tol=1e-7)
    assert np.allclose(E, np.eye(3), atol=1e-5)
    assert weights.sum() == pytest.approx(1.0)
    lev = np.einsum("ij,ji->i", pts, np.linalg.solve(E, pts.T))
    assert (lev <= 1.0 + 1e-6).all()


def test_mvee_square_corners_is_circle_radius_sqrt2():
    pts = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    E, _ = mvee(pts, tol=1e-9)
    # brute force over centered ellipses x^T diag(a,b)^-1 x <= 1 says the
    # optimum is the circle of radius sqrt(2): E = 2 I
    assert np.allclose(E, 2.0 * np.eye(2), atol=1e-6)


def test_mvee_sign_flip_invariance():
    rng = derive_stream(4, 0)
    pts = rng.standard_normal((8, 3))
    E1, _ = mvee(pts)
    E2, _ = mvee(-pts)
    assert np.allclose(E1, E2, atol=1e-8)


def test_mvee_rank_deficient_rejected():
    pts = np.array([[1.0, 0.0], [2.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(ValueError):
        mvee(pts)


def test_design_canonical_basis():
    design = doptimal_design(np.eye(4), tol=1e-9)
    assert np.allclose(design.weights, 0.25, atol=1e-6)
    assert np.allclose(design.design_matrix, np.eye(4) / 4, atol=1e-6)
    lev = design.leverage(np.eye(4))
    assert np.allclose(lev, 4.0, atol=1e-5)


def test_design_one_dimensional():
    design = doptimal_design(np.array([[1.0], [2.0]]))
    assert np.allclose(design.weights, [0.0, 1.0])


def test_design_duplicates_do_not_change_matrix():
    rng = derive_stream(5, 0)
    pts = rng.standard_normal((6, 2))
    d1 = doptimal_design(pts, tol=1e-8)
    d2 = doptimal_design(np.vstack([pts, pts]), tol=1e-8)
    assert np.allclose(d1.design_matrix, d2.design_matrix, atol=1e-5)


def test_design_certificate_two_sided():
    rng = derive_stream(6, 0)
    for _ in range(5):
        d = int(rng.integers(2, 5))
        pts = rng.standard_normal((3 * d, d))
        design = doptimal_design(pts, tol=1e-7)
        lev = design.leverage(pts)
        assert lev.max() <= d * (1 + 1e-7) + 1e-12
        assert lev.max() >= d - 1e-9


def test_capped_projection_negent_hand_values():
    assert np.allclose(project_capped_simplex_negent(np.array([0.2, 0.6]), 1.0),
                       [0.25, 0.75])
    assert np.allclose(project_capped_simplex_negent(np.array([4.0, 1.0, 1.0]), 2.0),
                       [1.0, 0.5, 0.5])
    feasible = np.array([0.9, 0.6, 0.5])
    assert np.allclose(project_capped_simplex_negent(feasible, 2.0), feasible)
    with pytest.raises(ValueError):
        project_capped_simplex_negent(np.array([0.5, 0.5]), 3.0)


def test_capped_projection_potential_symmetric():
    psi = power_potential(2.0)
    x = project_capped_simplex_potential(np.array([0.4, 0.4]), 1.0, psi)
    assert np.allclose(x, 0.5, atol=1e-9)


def test_capped_projection_exp_matches_negent():
    rng = derive_stream(7, 0)
    psi = exp_potential()
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(2, 9))
        m = float(rng.integers(1, d + 1))
        w = rng.random(d) * 4 + 1e-3
        a = project_capped_simplex_negent(w, m)
        b = project_capped_simplex_potential(w, m, psi)
        worst = max(worst, float(np.abs(a - b).max()))
    assert worst <= 1e-8


def test_capped_projection_optimality_certificate():
    # the projection beats 1000 random feasible points in Bregman divergence;
    # for the power-2 potential: F(x) = -2 sum sqrt(x_i), grad F = -1/sqrt(x)
    rng = derive_stream(8, 0)
    psi = power_potential(2.0)
    d, m = 5, 2.0
    w = rng.random(d) * 2 + 0.05

    def divergence(a, b):
        Fa = float((-2.0 * np.sqrt(a)).sum())
        Fb = float((-2.0 * np.sqrt(b)).sum())
        return Fa - Fb - float((-1.0 / np.sqrt(b)) @ (a - b))

    z = project_capped_simplex_potential(w, m, psi)
    dz = divergence(z, w)
    checked = 0
    for _ in range(1000):
        y = rng.random(d)
        y *= m / y.sum()
        if y.max() > 1.0:
            continue
        checked += 1
        assert dz <= divergence(y, w) + 1e-9
    assert checked > 500


def test_negent_projection_optimality_certificate():
    # the entropy projection also beats 1000 random feasible points
    rng = derive_stream(13, 0)
    d, m = 5, 2.0
    w = rng.random(d) * 3 + 0.05

    def divergence(a, b):
        terms = np.where(a > 0, a * np.log(a / b), 0.0) - a + b
        return float(terms.sum())

    z = project_capped_simplex_negent(w, m)
    dz = divergence(z, w)
    checked = 0
    for _ in range(1000):
        y = rng.random(d)
        y *= m / y.sum()
        if y.max() > 1.0:
            continue
        checked += 1
        assert dz <= divergence(y, w) + 1e-9
    assert checked > 500


def test_madow_binary_point_is_deterministic():
    rng = derive_stream(9, 0)
    x = np.array([1.0, 0.0, 1.0, 0.0])
    for _ in range(10):
        assert np.array_equal(madow_sample(x, rng), x)


def test_madow_always_m_ones():
    rng = derive_stream(10, 0)
    for _ in range(200):
        d = int(rng.integers(2, 9))
        m = int(rng.integers(1, d + 1))
        x = rng.random(d)
        x *= m / x.sum()
        x = np.minimum(x, 1.0)
        x[x.argmax()] += m - x.sum()  # re-balance; may exceed 1 -> clamp and retry
        if x.max() > 1.0 or x.min() < 0.0:
            continue
        v = madow_sample(x, rng)
        assert v.sum() == m
        assert set(np.unique(v)).issubset({0.0, 1.0})


def test_madow_half_inclusion_exact():
    x = np.full(4, 0.5)
    probs = madow_inclusion_probabilities(x)
    assert np.allclose(probs, 0.5, atol=1e-15)


def test_madow_inclusion_exact_small_d():
    rng = derive_stream(11, 0)
    for _ in range(30):
        d = int(rng.integers(2, 7))
        m = int(rng.integers(1, d))
        x = rng.dirichlet(np.ones(d)) * m
        if x.max() > 1.0:
            continue
        probs = madow_inclusion_probabilities(x)
        assert np.allclose(probs, x, atol=1e-12)


def test_madow_rejects_bad_input():
    rng = derive_stream(12, 0)
    with pytest.raises(ValueError):
        madow_sample(np.array([1.5, 0.5]), rng)
    with pytest.raises(ValueError):
        madow_sample(np.array([0.4, 0.4]), rng, m=2)
