import math

import numpy as np
import pytest

from oracles import glasso_objective, ista_toeplitz_glasso
from ticc.glasso import (AdmmConfig, GlassoProblem, objective_value,
                         scalar_lambda, solve, stationarity_residual,
                         theta_update, z_update)
from ticc.toeplitz import OccurrenceIndex, assemble, nearest_toeplitz


def random_problem(rng, n, w, lam_scale=0.1, samples=None):
    nw = n * w
    if samples is None:
        samples = 4 * nw
    Y = rng.standard_normal((samples, nw))
    S = Y.T @ Y / samples
    S = (S + S.T) / 2
    lam = np.full((nw, nw), lam_scale * float(np.mean(np.abs(S))))
    return GlassoProblem(S=S, lam=lam, n=n, w=w)


def test_theta_update_identity_fixed_point():
    z = np.zeros((3, 3))
    theta = theta_update(z, z, np.zeros((3, 3)), 1.0)
    np.testing.assert_allclose(theta, np.eye(3), atol=1e-12)


def test_theta_update_scalar_golden_section():
    # stationarity -1/theta + 1 + theta = 0 at theta = (sqrt(5)-1)/2
    theta = theta_update(np.zeros((1, 1)), np.zeros((1, 1)), np.array([[1.0]]), 1.0)
    assert theta[0, 0] == pytest.approx((math.sqrt(5.0) - 1.0) / 2.0, abs=1e-14)


def test_theta_update_matches_eigen_recipe():
    # D = -1, rho = 1: theta = (D + sqrt(D^2 + 4 rho)) / (2 rho)
    d = -1.0
    expected = (d + math.sqrt(d * d + 4.0)) / 2.0
    theta = theta_update(np.zeros((1, 1)), np.zeros((1, 1)), np.array([[1.0]]), 1.0)
    assert theta[0, 0] == pytest.approx(expected, abs=1e-15)


def test_theta_update_positive_definite_and_stationary():
    rng = np.random.default_rng(4)
    for _ in range(10):
        n, w = rng.integers(1, 4), rng.integers(1, 4)
        nw = n * w
        z = rng.standard_normal((nw, nw))
        z = (z + z.T) / 2
        u = rng.standard_normal((nw, nw))
        u = (u + u.T) / 2
        S = rng.standard_normal((nw, nw))
        S = (S + S.T) / 2
        rho = float(rng.uniform(0.2, 3.0))
        theta = theta_update(z, u, S, rho)
        assert np.linalg.eigvalsh(theta).min() > 0
        assert stationarity_residual(theta, z, u, S, rho) <= 1e-8 * nw


def test_theta_update_rejects_non_finite():
    bad = np.full((2, 2), np.nan)
    with pytest.raises(ValueError, match="non-finite"):
        theta_update(bad, np.zeros((2, 2)), np.zeros((2, 2)), 1.0)


def test_z_update_zero_penalty_is_projection():
    rng = np.random.default_rng(8)
    occ = OccurrenceIndex.for_shape(2, 3)
    theta = rng.standard_normal((6, 6))
    u = rng.standard_normal((6, 6))
    z = z_update(theta, u, np.zeros((6, 6)), 1.3, occ)
    proj = assemble(nearest_toeplitz(theta + u, 2, 3, occ))
    np.testing.assert_allclose(z, proj, atol=1e-14)


def test_z_update_hand_computed_shrinkage():
    # occurrence set of A(1) for n=1, w=2 sits at (0,1) and (1,0)
    occ = OccurrenceIndex.for_shape(1, 2)
    a = np.array([[0.0, 0.5], [0.7, 0.0]])
    lam = np.array([[0.0, 0.1], [0.1, 0.0]])
    z = z_update(a, np.zeros((2, 2)), lam, 1.0, occ)
    assert z[0, 1] == pytest.approx((1.2 - 0.2) / 2.0)
    assert z[1, 0] == pytest.approx(0.5)


def test_z_update_dead_zone_gives_zero():
    occ = OccurrenceIndex.for_shape(1, 2)
    a = np.array([[0.0, 0.5], [0.7, 0.0]])
    lam = np.array([[0.0, 1.0], [1.0, 0.0]])
    z = z_update(a, np.zeros((2, 2)), lam, 1.0, occ)
    assert z[0, 1] == 0.0 and z[1, 0] == 0.0


def test_z_update_exactly_block_toeplitz():
    rng = np.random.default_rng(12)
    occ = OccurrenceIndex.for_shape(3, 2)
    theta = rng.standard_normal((6, 6))
    u = rng.standard_normal((6, 6))
    lam = np.abs(rng.standard_normal((6, 6)))
    lam = (lam + lam.T) / 2
    z = z_update(theta, u, lam, 0.7, occ)
    assert np.array_equal(assemble(nearest_toeplitz(z, 3, 2, occ)), z)


def test_solve_scalar_unregularized_mle():
    prob = GlassoProblem(S=np.array([[1.0]]), lam=np.zeros((1, 1)), n=1, w=1)
    sol = solve(prob)
    assert assemble(sol.theta)[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert sol.converged


def test_solve_toeplitz_input_recovers_inverse():
    S = np.array([[1.0, 0.5], [0.5, 1.0]])
    prob = GlassoProblem(S=S, lam=np.zeros((2, 2)), n=1, w=2)
    sol = solve(prob, AdmmConfig(eps_abs=1e-9, eps_rel=1e-9, max_iter=5000))
    expected = np.array([[1.0, -0.5], [-0.5, 1.0]]) / 0.75
    np.testing.assert_allclose(assemble(sol.theta), expected, atol=1e-6)


def test_solve_matches_proximal_gradient_oracle():
    rng = np.random.default_rng(21)
    for n, w in [(2, 2), (1, 3), (3, 2)]:
        prob = random_problem(rng, n, w)
        sol = solve(prob, AdmmConfig(eps_abs=1e-10, eps_rel=1e-10, max_iter=20000))
        _, obj_oracle = ista_toeplitz_glasso(prob.S, prob.lam, n, w, iterations=20000)
        assert abs(sol.objective - obj_oracle) <= 1e-6


def test_solve_set_order_invariance_bitwise():
    from ticc.toeplitz import occurrence_sets

    rng = np.random.default_rng(30)
    prob = random_problem(rng, 2, 2)
    sets = occurrence_sets(2, 2)
    occ1 = OccurrenceIndex.from_sets(2, 2, sets)
    occ2 = OccurrenceIndex.from_sets(2, 2, sets[::-1])
    s1 = solve(prob, occ=occ1)
    s2 = solve(prob, occ=occ2)
    assert np.array_equal(assemble(s1.theta), assemble(s2.theta))


def test_solve_warm_start_reaches_same_solution():
    rng = np.random.default_rng(31)
    prob = random_problem(rng, 2, 2)
    cold = solve(prob)
    warm = solve(prob, warm=cold.state)
    assert warm.iterations <= cold.iterations
    np.testing.assert_allclose(assemble(warm.theta), assemble(cold.theta), atol=1e-5)


def test_solve_rank_deficient_covariance_stays_pd():
    # fewer samples than dimensions, as with clusters smaller than n*w
    rng = np.random.default_rng(32)
    prob = random_problem(rng, 2, 3, lam_scale=0.5, samples=4)
    sol = solve(prob)
    assert sol.converged
    assert np.linalg.eigvalsh(assemble(sol.theta)).min() > 0


def test_solve_non_convergence_flagged():
    rng = np.random.default_rng(33)
    prob = random_problem(rng, 2, 2)
    sol = solve(prob, AdmmConfig(max_iter=3))
    assert not sol.converged
    assert sol.iterations == 3
    assert np.isfinite(sol.primal_res)


def test_solve_trace_collection():
    rng = np.random.default_rng(34)
    prob = random_problem(rng, 1, 2)
    sol = solve(prob, collect_trace=True)
    assert len(sol.trace) == sol.iterations
    it, primal, dual, obj, stat = sol.trace[-1]
    assert it == sol.iterations and np.isfinite(obj)
    assert stat <= 1e-8 * prob.nw


def test_objective_value_infinite_for_non_pd():
    S = np.eye(2)
    assert objective_value(S, np.zeros((2, 2)), -np.eye(2)) == math.inf


def test_objective_value_matches_oracle_definition():
    rng = np.random.default_rng(35)
    S = rng.standard_normal((3, 3))
    S = S @ S.T / 3
    lam = np.abs(rng.standard_normal((3, 3)))
    theta = np.eye(3) + 0.1
    assert objective_value(S, lam, theta) == pytest.approx(
        glasso_objective(S, lam, theta), rel=1e-12)


def test_problem_validation():
    with pytest.raises(ValueError, match="nonnegative"):
        GlassoProblem(S=np.eye(2), lam=-np.ones((2, 2)), n=1, w=2)
    with pytest.raises(ValueError, match="symmetric"):
        GlassoProblem(S=np.array([[1.0, 0.4], [0.1, 1.0]]),
                      lam=np.zeros((2, 2)), n=1, w=2)
    with pytest.raises(ValueError, match="non-finite"):
        GlassoProblem(S=np.full((2, 2), np.inf), lam=np.zeros((2, 2)), n=1, w=2)
    with pytest.raises(ValueError):
        AdmmConfig(rho=-1.0)


def test_scalar_lambda_broadcast():
    lam = scalar_lambda(0.3, 2, 2)
    assert lam.shape == (4, 4) and np.all(lam == 0.3)
    with pytest.raises(ValueError):
        scalar_lambda(-0.1, 2, 2)


def test_z_update_positionally_toeplitz_odd_counts():
    from oracles import is_exactly_block_toeplitz

    rng = np.random.default_rng(41)
    occ = OccurrenceIndex.for_shape(2, 3)  # odd occurrence counts present
    theta = rng.standard_normal((6, 6))
    u = rng.standard_normal((6, 6))
    lam = np.full((6, 6), 0.05)
    z = z_update(theta, u, lam, 1.0, occ)
    assert is_exactly_block_toeplitz(z, 2, 3)
