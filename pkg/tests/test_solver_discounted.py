import numpy as np
import pytest

from commcoord.scenario import CommConstraints, Discounted, random_scenario, table3_scenario
from commcoord.solver import ConvergenceError, solve_discounted


def test_zero_cost_gives_zero_value(rng):
    s = random_scenario(rng, cost_scale=0.0, rho_max=0.0)
    res = solve_discounted(s, grid=11)
    assert np.all(res.value_function.table() == 0.0)
    assert res.value == 0.0


def test_contraction_ratio_is_bounded_by_step_discount():
    res = solve_discounted(table3_scenario(1.0), grid=21, vi_tol=1e-9)
    hist = np.asarray(res.report["residual_history"])
    # sup-norm contraction up to floating-point noise on values of size ~100
    assert np.all(hist[1:] <= 0.95 ** 2 * hist[:-1] * (1 + 1e-6) + 1e-11)


def test_converges_below_tolerance():
    res = solve_discounted(table3_scenario(2.0), grid=21)
    assert res.report["residual"] < res.report["tolerance"]
    assert res.report["iterations"] == len(res.report["residual_history"])


def test_convergence_error():
    with pytest.raises(ConvergenceError):
        solve_discounted(table3_scenario(1.0), grid=11, max_iter=3)


def test_values_nonnegative_and_bounded_for_nonnegative_costs():
    s = table3_scenario(2.0)
    V = solve_discounted(s, grid=21).value_function.table()
    dc, du = s.phase_discounts()
    bound = (s.c_max * du + 2.0) / (1 - dc * du)
    assert np.all(V >= 0) and np.all(V <= bound + 1e-9)


def test_grid_refinement_changes_little():
    coarse = solve_discounted(table3_scenario(1.0), grid=51).value
    fine = solve_discounted(table3_scenario(1.0), grid=101).value
    assert abs(coarse - fine) < 0.5


def test_policy_decisions_are_valid_indices():
    res = solve_discounted(table3_scenario(1.0), grid=21)
    b = np.array([[1.0, 0.0], [0.37, 0.63], [0.0, 1.0]])
    k = res.policy.comm_indices(b, b)
    assert k.shape == (3,) and np.all((0 <= k) & (k < 16))
    l = res.policy.ctrl_indices(b, b)
    assert np.all((0 <= l) & (l < 16))
    assert res.policy.decide_comm(table3_scenario().initial_pair()).first.width == 2


def test_s_min_constraint_in_discounted_mode():
    s = table3_scenario(0.5)
    free = solve_discounted(s, grid=21).value
    spaced = solve_discounted(s.replace(constraints=CommConstraints(s_min=3)), grid=21, min_sweeps=200)
    free200 = solve_discounted(s, grid=21, min_sweeps=200).value
    assert spaced.value >= free200 - 1e-9
    assert free == pytest.approx(free200, abs=0.05)


def test_s_max_one_is_always_in_discounted_mode():
    from commcoord.solver import baseline_always
    s = table3_scenario(1.0)
    every = solve_discounted(s.replace(constraints=CommConstraints(s_max=1)), grid=21, vi_tol=1e-9)
    assert every.value == pytest.approx(baseline_always(s).value, abs=1e-5)


def test_requires_discounted_horizon():
    from commcoord.scenario import Finite
    with pytest.raises(ValueError):
        solve_discounted(table3_scenario().replace(horizon=Finite(3)))
    assert isinstance(table3_scenario().horizon, Discounted)
