import math

import numpy as np
import pytest

from oracles import cvxpy_comparator, grid_comparator
from trustfl.oracle import (
    BoundConstants,
    ComparatorNotConverged,
    regret_bound,
    solve_comparator,
    violation_bound,
)


def dataset(H, T, d, seed=0, same=False):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(d)
    F = rng.standard_normal((1 if same else H, T, d))
    L = np.where(F @ w >= 0, 1, -1)
    flip = rng.random(L.shape) < 0.1
    L = np.where(flip, -L, L)
    if same:
        F, L = np.repeat(F, H, axis=0), np.repeat(L, H, axis=0)
    return F, L


def ones(**kw):
    base = dict(a=1.0, zeta=0.1, m=1, C=1.0, G=1.0, B=1.0, r=1.0, V=1, beta=0.5)
    base.update(kw)
    return BoundConstants(**base)


def test_single_client_matches_grid():
    F, L = dataset(1, 40, 2, seed=1)
    comp = solve_comparator(F, L, [], 0.5, 1.0)
    grid, _ = grid_comparator(F, L, [], 0.5)
    assert comp.achieved_objective <= grid + 1e-9
    assert (grid - comp.achieved_objective) / 40 <= 1e-3


def test_identical_data_large_kappa():
    F, L = dataset(2, 30, 2, seed=2, same=True)
    comp = solve_comparator(F, L, [(0, 1)], 5.0, 1.0)
    solo = solve_comparator(F[:1], L[:1], [], 5.0, 1.0)
    assert np.allclose(comp.models[0], comp.models[1], atol=1e-5)
    assert np.allclose(comp.models[0], solo.models[0], atol=1e-5)


def test_zero_kappa_forces_consensus():
    F, L = dataset(2, 30, 2, seed=3)
    comp = solve_comparator(F, L, [(0, 1)], 0.0, 1.0)
    assert np.sum((comp.models[0] - comp.models[1]) ** 2) <= 1e-6


@pytest.mark.parametrize("kappa", [0.5, 0.1])
def test_matches_conic_solver(kappa):
    F, L = dataset(3, 40, 2, seed=4)
    edges = [(0, 1), (0, 2), (1, 2)]
    comp = solve_comparator(F, L, edges, kappa, 1.0)
    ref, X = cvxpy_comparator(F, L, edges, kappa)
    assert comp.achieved_objective == pytest.approx(ref, abs=1e-4)
    assert np.allclose(comp.models, X, atol=1e-4)


def test_certificates_and_beats_zero_point():
    F, L = dataset(3, 40, 3, seed=5)
    edges = [(0, 1), (1, 2)]
    comp = solve_comparator(F, L, edges, 0.3, 1.0, tol=1e-6)
    assert comp.max_constraint_residual <= 1e-6
    assert np.all(np.linalg.norm(comp.models, axis=1) <= 1.0 + 1e-12)
    zero = F.shape[0] * F.shape[1] * math.log(2.0)
    assert comp.achieved_objective <= zero + 1e-6


def test_budget_exhaustion_raises():
    F, L = dataset(2, 30, 2, seed=6)
    with pytest.raises(ComparatorNotConverged) as err:
        solve_comparator(F, L, [(0, 1)], 0.0, 1.0, tol=1e-12, max_iter=5)
    assert err.value.residual >= 0


def test_regret_bound_example():
    assert regret_bound(ones(), 4) == pytest.approx(8 + 2.5 * (6 / 0.45) * 2, rel=1e-15)
    assert regret_bound(ones(), 4) == pytest.approx(74.67, abs=5e-3)


def test_regret_bound_scaling():
    k = ones()
    assert regret_bound(k, 16) == pytest.approx(2 * regret_bound(k, 4), rel=1e-14)
    vals = [regret_bound(ones(a=a), 4) for a in (1e-2, 1e-4, 1e-6)]
    assert vals[0] < vals[1] < vals[2] and vals[2] > 1e6


def test_zeta_interval_enforced():
    with pytest.raises(ValueError):
        regret_bound(ones(zeta=1.0), 4)
    with pytest.raises(ValueError):
        regret_bound(ones(beta=None), 4)


def test_violation_bound_formula():
    # all constants one, the only admissible reading once beta is dropped
    k = ones(zeta=1.0, beta=None)
    assert violation_bound(k, 1) == pytest.approx(4 + 4 * math.sqrt(8), rel=1e-15)


def test_violation_bound_scaling():
    k = ones()
    lead = violation_bound(k, 16) - violation_bound(k, 0)
    assert lead == pytest.approx(8 * (violation_bound(k, 1) - violation_bound(k, 0)), rel=1e-13)
    k0 = ones(B=0.0, zeta=1e-12, beta=None, V=4, G=2.0, r=0.5)
    coeff = violation_bound(k0, 1) - violation_bound(k0, 0)
    assert coeff == pytest.approx(2 * math.sqrt(4 * 2.0 * 0.5), rel=1e-9)


def test_bounds_monotone_in_T():
    k = ones()
    Ts = np.linspace(0, 1e4, 101)
    r = [regret_bound(k, t) for t in Ts]
    v = [violation_bound(k, t) for t in Ts]
    assert np.all(np.diff(r) > 0) and np.all(np.diff(v) > 0)
