import math

import numpy as np
import pytest

from landscape_probe.data import Dataset, InputLaw, SamplerSpec, Teacher, make_dataset
from landscape_probe.landscape import (StationaryRecord, classify, degenerate_gradient_audit,
                                       find_stationary, pair_points)
from landscape_probe.model import Architecture, WeightPoint
from landscape_probe.risk import PopulationOracle, RiskFunction
from landscape_probe.solver import SolverConfig, newton, shifted_solve


def scalar_population(product=6.0, radius=10.0):
    arch = Architecture((1, 1, 1))
    teacher = Teacher(arch, WeightPoint((np.array([[2.0]]), np.array([[product / 2]])), radius))
    spec = SamplerSpec(InputLaw.BOUNDED_SUBGAUSSIAN, 1.0, 1)
    return RiskFunction.population(arch, PopulationOracle.exact_linear(spec, teacher), radius)


# ---- solver ---------------------------------------------------------------------

def test_newton_solves_a_quadratic_in_one_step():
    A = np.array([[3.0, 1.0], [1.0, 2.0]])
    c = np.array([1.0, -1.0])
    res = newton(lambda x: 0.5 * (x - c) @ A @ (x - c), lambda x: A @ (x - c), lambda x: A, np.zeros(2))
    assert res.converged and res.iterations == 1
    np.testing.assert_allclose(res.x, c, atol=1e-12)


def test_shifted_solve_on_indefinite_matrix():
    H = np.diag([2.0, -1.0])
    p = shifted_solve(H, np.array([2.0, 1.0]))
    # the shift lifts the smallest eigenvalue to 1e-6
    np.testing.assert_allclose(p, [2.0 / (2.0 + 1.000001), 1.0 / 1e-6])


def test_stationary_mode_reaches_a_saddle():
    H = np.diag([1.0, -1.0])
    res = newton(lambda x: 0.5 * x @ H @ x, lambda x: H @ x, lambda x: H, np.array([0.3, 0.2]),
                 cfg=SolverConfig(mode="stationary"))
    assert res.converged and np.linalg.norm(res.x) <= 1e-9


def test_minimiser_outside_the_ball_is_not_reported_converged():
    arch = Architecture((1, 1, 1))
    fn = RiskFunction.empirical(arch, Dataset(np.array([[1.0]]), np.array([[100.0]])), 1.0)
    res = newton(fn.value, fn.grad, fn.hess, np.array([0.5, 0.5]), fn.project)
    assert not res.converged
    assert fn.point(res.x).in_ball()


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(mode="climb")


# ---- stationary points ------------------------------------------------------------

def test_origin_is_a_nondegenerate_saddle_of_the_scalar_risk():
    fn = scalar_population()
    rec = classify(fn, np.zeros(2), zeta=1e-3)
    # Hessian [[0, -6], [-6, 0]]
    assert rec.grad_norm == 0.0
    np.testing.assert_allclose(rec.spectrum, [-6.0, 6.0])
    assert rec.index == 1 and not rec.degenerate and not rec.boundary_active


def test_origin_is_degenerate_for_a_zero_teacher():
    rec = classify(scalar_population(product=0.0), np.zeros(2))
    assert rec.index == 0 and rec.degenerate


def test_teacher_manifold_is_degenerate():
    fn = scalar_population()
    recs, diags = find_stationary(fn, [np.array([2.2, 2.9]), np.array([-1.5, -3.5])])
    assert all(d.converged for d in diags)
    for r in recs:
        a, b = r.w.flat()
        assert a * b == pytest.approx(6.0, abs=1e-9) and r.grad_norm <= 1e-9
        # Hessian [[b^2, ab], [ab, a^2]] has a zero eigenvalue along the hyperbola
        assert r.degenerate and r.index == 0
        assert r.spectrum[-1] == pytest.approx(a * a + b * b)


def test_teacher_start_is_stationary_immediately():
    fn = scalar_population()
    recs, diags = find_stationary(fn, [WeightPoint((np.array([[2.0]]), np.array([[3.0]])), 10.0)])
    assert diags[0].iterations == 0 and recs[0].grad_norm == 0.0


def test_duplicate_starts_merge():
    fn = scalar_population()
    recs, _ = find_stationary(fn, [np.array([0.1, -0.05]), np.array([-0.05, 0.1])], mode="stationary")
    assert len(recs) == 1 and recs[0].index == 1
    assert np.linalg.norm(recs[0].w.flat()) <= 1e-8


def test_find_stationary_needs_positive_tolerance():
    with pytest.raises(ValueError):
        find_stationary(scalar_population(), [np.zeros(2)], tol=0.0)


# ---- pairing ------------------------------------------------------------------------

def records(points, zeta=1e-3):
    fn = scalar_population()
    return [classify(fn, np.asarray(p, dtype=float), zeta) for p in points]


def test_identical_lists_pair_at_zero_distance():
    recs = records([[0.0, 0.0], [2.0, 3.0]])
    res = pair_points(recs, recs, bound=0.1)
    assert len(res.pairs) == 2 and not res.unmatched_empirical and not res.unmatched_population
    assert all(p.distance == 0.0 and p.index_match and p.within_bound for p in res.pairs)
    assert res.all_indices_match and res.ambiguous == 0


def test_far_points_stay_unmatched():
    res = pair_points(records([[0.0, 0.0]]), records([[2.0, 3.0]]), match_radius=0.5)
    assert not res.pairs
    assert len(res.unmatched_empirical) == 1 and len(res.unmatched_population) == 1


def test_closest_pair_wins_and_ambiguity_is_flagged():
    emp = records([[0.0, 0.0]])
    pop = records([[0.3, 0.0], [0.1, 0.0]])
    res = pair_points(emp, pop, match_radius=0.5)
    assert len(res.pairs) == 1 and res.pairs[0].distance == pytest.approx(0.1)
    assert res.pairs[0].ambiguous and res.ambiguous == 1
    assert len(res.unmatched_population) == 1


def hand_record(index, degenerate, at=(0.0, 0.0)):
    w = WeightPoint.from_flat(Architecture((1, 1, 1)), np.array(at))
    return StationaryRecord(w, 0.0, np.array([1.0, 1.0]), index, degenerate, "hand")


def test_index_mismatch_only_counts_when_nondegenerate():
    assert not pair_points([hand_record(1, False)], [hand_record(0, False)]).pairs[0].index_match
    assert pair_points([hand_record(1, False)], [hand_record(0, True)]).pairs[0].index_match
    assert pair_points([hand_record(1, True)], [hand_record(0, False)]).pairs[0].index_match
    res = pair_points([hand_record(1, False)], [hand_record(0, False)])
    assert not res.all_indices_match and res.pairs[0].to_dict()["pass"] is False


def test_bound_flag():
    res = pair_points(records([[0.0, 0.0]]), records([[0.2, 0.0]]), bound=0.1)
    assert res.pairs[0].within_bound is False
    assert res.pairs[0].to_dict()["pass"] is False


def test_match_radius_must_be_positive():
    with pytest.raises(ValueError):
        pair_points([], [], match_radius=0.0)
    assert pair_points([], []).pairs == []


# ---- degenerate audit ---------------------------------------------------------------------

def test_gradient_audit_at_a_population_stationary_point():
    arch = Architecture((2, 2, 1))
    teacher = Teacher(arch, WeightPoint.random(arch, 1.0, np.random.default_rng(0)))
    spec = SamplerSpec(InputLaw.GAUSSIAN, 1.0, 2, seed=1)
    zero = WeightPoint.zeros(arch, 1.0)
    groups = {n: [make_dataset(spec, teacher, n, trial=k) for k in range(8)] for n in (64, 4096)}
    rows = degenerate_gradient_audit(arch, zero, groups)
    assert [r["n"] for r in rows] == [64, 4096]
    # at the origin every layer gradient carries a zero factor
    assert all(r["max"] == 0.0 for r in rows)
    w = WeightPoint.random(arch, 1.0, np.random.default_rng(3))
    rows = degenerate_gradient_audit(arch, w, groups)
    assert rows[0]["q25"] <= rows[0]["median"] <= rows[0]["q75"] <= rows[0]["max"]
    assert math.isfinite(rows[1]["median"])
