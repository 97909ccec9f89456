import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqcal.calib import (
    THRESHOLD,
    CalibratedSet,
    CalibrationProblem,
    SetPool,
    bar_search,
    build_system,
    calibrate,
    calibrate_designed,
    derive_seed,
    moment_rows,
    multi_dist_pool,
    solve_weights,
)
from seqcal.dist import calibration_families, parse_dist
from seqcal.exceptions import DimensionError, DomainError, SearchExhausted
from seqcal.seqlab import DESIGNED_PAIRS, Arithmetic, PseudoRandom, designed_recipes


def _check_invariants(sol, pairs=()):
    w = sol.weights
    assert w.min() >= 0
    assert abs(w.sum() - 1) <= 1e-12
    for i, j in pairs:
        assert abs(w[i] - w[j]) <= 1e-12


def test_build_system_uniform_example():
    # Arithmetic mean is exactly 1/2, which is E[m_1] for Uniform(0, 1). The
    # problem needs k_max + 1 columns, so the arithmetic grid appears twice.
    problem = CalibrationProblem(parse_dist("uniform"), 7, (Arithmetic(7), Arithmetic(7)), k_max=1)
    a, b = build_system(problem)
    np.testing.assert_allclose(a, [[0.5, 0.5], [1.0, 1.0]], atol=1e-15)
    np.testing.assert_allclose(b, [0.5, 1.0])
    with pytest.raises(DimensionError):
        CalibrationProblem(parse_dist("uniform"), 7, (Arithmetic(7),), k_max=1)


def test_build_system_rows_and_targets():
    dist = parse_dist("gaussian")
    problem = CalibrationProblem(dist, 10, tuple(designed_recipes(10, 1)))
    a, b = build_system(problem)
    assert a.shape == (5, 12) and b.shape == (5,)
    assert np.all(a[-1] == 1.0) and b[-1] == 1.0
    assert b[0] == 0.0 and b[1] == pytest.approx(0.9)
    assert b[3] == pytest.approx(9 / 1000 * ((100 - 30 + 3) * 3 + 3 * 17))
    x = dist.quantile(problem.recipes[0].generate().values)
    assert a[2, 0] == pytest.approx(np.mean((x - x.mean()) ** 3), abs=1e-15)


def test_problem_validation():
    g = parse_dist("gaussian")
    with pytest.raises(DimensionError):
        CalibrationProblem(g, 10, tuple(designed_recipes(10, 1)[:4]))
    with pytest.raises(DimensionError):
        CalibrationProblem(g, 10, tuple(designed_recipes(10, 1)), pairs=((0, 1), (1, 2)))
    with pytest.raises(DimensionError):
        CalibrationProblem(g, 10, tuple(designed_recipes(10, 1)), pairs=((0, 12),))
    with pytest.raises(DimensionError):
        CalibrationProblem(g, 10, tuple(designed_recipes(10, 1)[:11]) + (Arithmetic(9),))


def test_solver_examples():
    sol = solve_weights([[0.3], [1.0]], [0.3, 1.0])
    assert sol.weights.tolist() == [1.0] and sol.residual == 0.0 and sol.feasible
    sol = solve_weights([[0.4, 0.4], [1, 1]], [0.4, 1.0], pairs=[(0, 1)])
    np.testing.assert_allclose(sol.weights, [0.5, 0.5], atol=1e-15)
    sol = solve_weights([[1.0, 0.0], [1.0, 1.0]], [0.3, 1.0])
    np.testing.assert_allclose(sol.weights, [0.3, 0.7], atol=1e-14)
    assert sol.residual < 1e-15
    with pytest.raises(DimensionError):
        solve_weights(np.ones((3, 2)), np.ones(2))


def test_solver_reports_infeasibility():
    # Target mean outside the convex hull of the columns.
    sol = solve_weights([[0.2, 0.4], [1, 1]], [0.9, 1.0])
    assert not sol.feasible
    np.testing.assert_allclose(sol.weights, [0.0, 1.0], atol=1e-12)
    assert sol.residual == pytest.approx(0.5, rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(
    st.integers(2, 4),
    st.integers(5, 14),
    st.integers(0, 2**32 - 1),
    st.sampled_from(["spread", "sparse"]),
)
def test_solver_invariants_random(rows, cols, seed, tie_break):
    rng = np.random.default_rng(seed)
    a = np.vstack([rng.normal(size=(rows, cols)), np.ones(cols)])
    b = np.append(rng.normal(scale=0.5, size=rows), 1.0)
    pairs = ((0, 1), (2, 3)) if cols >= 6 else ()
    sol = solve_weights(a, b, pairs, tie_break=tie_break)
    _check_invariants(sol, pairs)
    # No feasible point on a fine random sample of the simplex does better.
    g = rng.dirichlet(np.ones(cols), size=400)
    for i, j in pairs:
        g[:, i] = g[:, j] = (g[:, i] + g[:, j]) / 2
    best = np.min(np.linalg.norm(g @ a.T - b, axis=1))
    assert sol.residual <= best + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**31), st.sampled_from(["gaussian", "exponential", "pareto(alpha=7)"]))
def test_single_sequence_is_self_consistent(n, seed, token):
    # A lone sequence is always consistent with its own empirical moments.
    x = parse_dist(token).quantile(PseudoRandom(n, seed, 0).generate().values)
    a = np.vstack([moment_rows(x[None, :], 4), np.ones(1)])
    sol = solve_weights(a, a[:, 0].copy())
    assert sol.weights.tolist() == [1.0]
    assert sol.residual <= 1e-12


def test_spread_is_min_norm_on_the_solution_face():
    cal = calibrate_designed("gaussian", 40, 3, tie_break="sparse")
    spread = calibrate_designed("gaussian", 40, 3, tie_break="spread")
    assert cal.qualified and spread.qualified
    assert np.sum(spread.weights**2) <= np.sum(cal.weights**2) + 1e-15
    assert np.count_nonzero(spread.weights > 0) >= np.count_nonzero(cal.weights > 0)


def test_spread_is_deterministic():
    a = calibrate_designed("gaussian", 25, 9, tie_break="spread").weights
    b = calibrate_designed("gaussian", 25, 9, tie_break="spread").weights
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("n", [5, 8, 9, 10, 20, 55, 100])
def test_designed_invariants(n):
    for tie_break in ("sparse", "spread"):
        cal = calibrate_designed("gaussian", n, 7, tie_break=tie_break)
        w = cal.weights
        assert w.min() >= 0 and abs(w.sum() - 1) <= 1e-12
        for i, j in DESIGNED_PAIRS:
            assert abs(w[i] - w[j]) <= 1e-12


def test_designed_gaussian_n10_residual():
    cal = calibrate_designed("gaussian(mu=0,sigma=1)", 10, 0)
    assert cal.residual < 1e-10 and cal.qualified


def test_stored_set_resolves_to_same_residual():
    cal = calibrate_designed("gaussian", 30, 4)
    back = CalibratedSet.from_dict(json.loads(json.dumps(cal.to_dict())))
    sol = back.resolve(tie_break="sparse", pairs=DESIGNED_PAIRS)
    assert abs(sol.residual - cal.residual) <= 1e-12
    pool = bar_search("gaussian", 12, 2, seed=5)
    back = SetPool.from_dict(json.loads(pool.to_json()))
    for s, t in zip(pool, back):
        assert abs(t.resolve().residual - s.residual) <= 1e-12


def test_equal_weight_random_sets_are_monte_carlo():
    # Forced equal weights over pseudo-random sequences: the residual is a
    # Monte Carlo error and shrinks as the number of sequences doubles.
    g = parse_dist("gaussian")
    n = 30

    def resid(count, seed):
        recipes = [PseudoRandom(n, seed, j) for j in range(count)]
        a, b = build_system(CalibrationProblem(g, n, tuple(recipes)))
        return np.linalg.norm(a @ np.full(count, 1.0 / count) - b)

    # Mean squared residual over 64 seeds; its expectation scales as 1/N.
    means = [np.mean([resid(count, s) ** 2 for s in range(64)]) for count in (200, 400, 800)]
    assert means[0] > means[1] > means[2]


def test_bar_search_gaussian_n10():
    pool = bar_search("gaussian(mu=0,sigma=1)", 10, 10, seed=42)
    assert len(pool) == 10
    assert all(s.residual < 1e-10 for s in pool)
    assert 0 < pool.meta["acceptance_rate"] <= 1
    for s in pool:
        assert len(s.recipes) == 12
        assert s.recipes[0] == Arithmetic(10)
        _check_invariants(s)
    again = bar_search("gaussian(mu=0,sigma=1)", 10, 10, seed=42)
    assert pool.to_json() == again.to_json()


def test_bar_search_qualified_sets_do_not_depend_on_count():
    small = bar_search("gaussian", 15, 3, seed=8)
    big = bar_search("gaussian", 15, 6, seed=8)
    assert small.to_json().count('"attempt"') == 3
    for a, b in zip(small, big):
        assert a.attempt == b.attempt and np.array_equal(a.weights, b.weights)


def test_bar_search_errors():
    with pytest.raises(DomainError):
        bar_search("gaussian", 4, 1, seed=0)
    with pytest.raises(DomainError):
        bar_search("gaussian", 10, 0, seed=0)
    with pytest.raises(SearchExhausted) as info:
        bar_search("gaussian", 10, 5, seed=0, threshold=1e-300, max_attempts=3)
    assert isinstance(info.value.partial, SetPool)
    assert info.value.partial.meta["attempts"] == 3


def test_multi_dist_pool():
    specs = calibration_families()
    pool = multi_dist_pool(specs, 3, 20, seed=1)
    assert len(pool) == 30 and pool.n_sequences == 360
    assert {s.dist for s in pool} == set(specs)
    assert all(s.qualified for s in pool)
    gauss = bar_search("gaussian", 20, 20, seed=2)
    combined = SetPool.combine("BAR-5D", gauss, pool)
    assert len(combined) == 50 and combined.n_sequences == 600
    with pytest.raises(DomainError):
        multi_dist_pool([], 3, 20, seed=1)


def test_pool_json_is_byte_stable(tmp_path):
    pool = bar_search("exponential", 9, 2, seed=3)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    pool.save(p1)
    SetPool.load(p1).save(p2)
    assert p1.read_bytes() == p2.read_bytes()
    d = json.loads(p1.read_text())
    assert d["generator"] and d["sets"][0]["dist"] == "exponential(lambda=1)"
    assert set(d["sets"][0]) >= {"dist", "n", "kMax", "seed", "residual", "recipes", "weights"}
    loaded = SetPool.load(p1)
    for s, t in zip(pool, loaded):
        assert s.weights.tobytes() == t.weights.tobytes()
        assert s.values.tobytes() == t.values.tobytes()


def test_pool_views():
    pool = SetPool.combine("x", bar_search("gaussian", 6, 2, seed=1), bar_search("gaussian", 7, 3, seed=1))
    assert pool.sizes == [6, 7]
    assert len(pool.at(7)) == 3 and len(pool.head(1)) == 1


def test_derive_seed():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
    assert 0 <= derive_seed(2**40, 5) < 2**63


def test_calibrate_generic():
    cal = calibrate("uniform", designed_recipes(12, 0), k_max=2)
    assert cal.k_max == 2 and cal.qualified
    assert cal.threshold == THRESHOLD
