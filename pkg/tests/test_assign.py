import math

import numpy as np
import pytest

from oracles import enumerate_paths_cost
from ticc.assign import (AssignmentPath, CostMatrix, InvalidModelError,
                         assign_dp, log_likelihood, nll_matrix, path_cost)
from ticc.toeplitz import BlockToeplitzMatrix

LOG_2PI = math.log(2.0 * math.pi)


def one_d_theta(v):
    return BlockToeplitzMatrix((np.array([[v]]),))


def test_log_likelihood_standard_normal_at_zero():
    ll = log_likelihood(np.array([0.0]), one_d_theta(1.0), np.array([0.0]))
    assert ll == pytest.approx(-0.5 * LOG_2PI)


def test_log_likelihood_standard_normal_at_one():
    ll = log_likelihood(np.array([1.0]), one_d_theta(1.0), np.array([0.0]))
    assert ll == pytest.approx(-0.5 - 0.5 * LOG_2PI)


def test_log_likelihood_bivariate_identity():
    theta = BlockToeplitzMatrix((np.eye(2),))
    ll = log_likelihood(np.zeros(2), theta, np.zeros(2))
    assert ll == pytest.approx(-LOG_2PI)


def test_log_likelihood_non_pd_raises():
    with pytest.raises(InvalidModelError):
        log_likelihood(np.zeros(1), one_d_theta(-1.0), np.zeros(1))


def test_nll_matrix_matches_pointwise_log_likelihood():
    rng = np.random.default_rng(14)
    rows = rng.standard_normal((7, 2))
    a0 = rng.standard_normal((2, 2))
    theta = BlockToeplitzMatrix(((a0 @ a0.T + np.eye(2)),))
    mu = rng.standard_normal(2)
    costs = nll_matrix(rows, [(theta, mu)])
    for t in range(7):
        assert costs.nll[t, 0] == pytest.approx(
            -log_likelihood(rows[t], theta, mu), rel=1e-12)


def test_assign_dp_beta_zero_pointwise_argmin():
    nll = np.array([[1.0, 2.0], [5.0, 1.0], [3.0, 3.0]])
    path = assign_dp(CostMatrix(nll), 0.0)
    # ties at t=2 go to the lowest cluster index
    np.testing.assert_array_equal(path.labels, [0, 1, 0])


def test_assign_dp_huge_beta_single_cluster():
    nll = np.array([[1.0, 3.0], [3.0, 1.0], [1.0, 3.0]])
    beta = float(nll.max(axis=1).sum()) + 1.0
    path = assign_dp(CostMatrix(nll), beta)
    assert path.num_switches == 0
    # constant path at the column-sum argmin
    assert path.labels[0] == int(nll.sum(axis=0).argmin())


def test_assign_dp_three_point_example():
    nll = np.array([[1.0, 3.0], [3.0, 1.0], [1.0, 3.0]])
    path = assign_dp(CostMatrix(nll), 0.5)
    np.testing.assert_array_equal(path.labels, [0, 1, 0])
    assert path_cost(CostMatrix(nll), path.labels, 0.5) == pytest.approx(4.0)


def test_assign_dp_matches_enumeration():
    rng = np.random.default_rng(77)
    for _ in range(60):
        T = int(rng.integers(1, 7))
        K = int(rng.integers(1, 4))
        nll = rng.standard_normal((T, K)) * 3.0
        beta = float(rng.choice([0.0, 0.5, 5.0]))
        costs = CostMatrix(nll)
        path = assign_dp(costs, beta)
        best, argmins = enumerate_paths_cost(nll, beta)
        assert path_cost(costs, path.labels, beta) == best  # bitwise
        assert path.labels.tolist() in argmins


def test_assign_dp_switch_count_monotone_in_beta():
    rng = np.random.default_rng(78)
    for _ in range(10):
        nll = rng.standard_normal((30, 3)) * 2.0
        costs = CostMatrix(nll)
        switches = [assign_dp(costs, b).num_switches
                    for b in (0.0, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0)]
        assert all(a >= b for a, b in zip(switches, switches[1:]))


def test_assign_dp_constant_row_shift_invariance():
    rng = np.random.default_rng(79)
    nll = rng.standard_normal((20, 3))
    costs = CostMatrix(nll)
    base = assign_dp(costs, 1.0)
    shifted = nll.copy()
    shifted[7] += 13.5  # same constant added to every cluster at one time
    shifted[12] -= 2.25
    path = assign_dp(CostMatrix(shifted), 1.0)
    np.testing.assert_array_equal(path.labels, base.labels)


def test_assign_dp_validation():
    with pytest.raises(ValueError):
        CostMatrix(np.empty((0, 2)))
    with pytest.raises(ValueError, match="finite"):
        CostMatrix(np.array([[np.inf, 1.0]]))
    with pytest.raises(ValueError, match="nonnegative"):
        assign_dp(CostMatrix(np.ones((2, 2))), -1.0)


def test_assignment_path_invariants():
    p = AssignmentPath(np.array([0, 0, 1, 1, 0]))
    assert p.T == 5
    assert p.num_switches == 2
    np.testing.assert_array_equal(p.members(0), [0, 1, 4])
    with pytest.raises(ValueError):
        AssignmentPath(np.array([0, -1]))


def test_assign_dp_tie_takes_over_lowest_min_index():
    # at t=1 state 1: staying costs prev[1]=1, switching from the argmin
    # costs prev[0]+beta=1; the strict inequality keeps the takeover branch
    nll = np.array([[0.0, 1.0], [5.0, 0.0]])
    path = assign_dp(CostMatrix(nll), 1.0)
    np.testing.assert_array_equal(path.labels, [0, 1])
