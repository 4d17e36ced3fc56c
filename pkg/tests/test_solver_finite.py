import numpy as np
import pytest

from commcoord.scenario import (AgentDynamics, CommConstraints, DiscountMode, Finite, FixedCommCost, Scenario,
                                defense_scenario)
from commcoord.solver import (ReachCapError, UnsolvedBelief, baseline_always, baseline_never, solve, solve_finite)
from helpers import defense_finite, random_finite, with_initial


@pytest.mark.parametrize("x1,x2", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_one_step_defense_from_point_masses(x1, x2):
    s = with_initial(defense_finite(1, rho=5.0), np.eye(2)[x1], np.eye(2)[x2])
    assert solve_finite(s).value == pytest.approx(s.cost[x1, x2].min(), abs=1e-12)


def test_one_step_defense_both_attacked_costs_twenty():
    s = with_initial(defense_finite(1, rho=5.0), (0, 1), (0, 1))
    assert solve_finite(s).value == pytest.approx(20.0, abs=1e-12)


def _matching_game(rho):
    # agent 1 must guess agent 2's uniformly random state
    a1 = AgentDynamics(np.ones((1, 2, 1)), np.ones(1))
    a2 = AgentDynamics(np.full((2, 1, 2), 0.5), np.full(2, 0.5))
    cost = np.zeros((1, 2, 2, 1))
    cost[0, 0, 1, 0] = cost[0, 1, 0, 0] = 1.0
    return Scenario((a1, a2), cost, FixedCommCost(rho), 1.0, horizon=Finite(1))


@pytest.mark.parametrize("rho,expected", [(0.0, 0.0), (0.2, 0.1), (0.5, 0.25), (0.9, 0.45), (3.0, 0.5)])
def test_one_step_value_of_information(rho, expected):
    # sharing only agent 2's state 1 reveals everything for half the price
    assert solve_finite(_matching_game(rho)).value == pytest.approx(expected, abs=1e-12)


def test_value_is_nondecreasing_in_rho():
    vals = [solve_finite(defense_finite(4, rho)).value for rho in (0, 1, 2, 4, 8, 16)]
    assert all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))


def test_optimal_between_baselines():
    s = defense_finite(6, rho=1.0)
    opt = solve_finite(s).value
    assert opt <= baseline_never(s).value + 1e-9
    assert opt <= baseline_always(s).value + 1e-9


def test_policy_lookup_and_unknown_belief():
    res = solve_finite(defense_finite(3))
    vf, policy = res
    pair = res.value_function.pre_layers[0][0].beliefs[0], res.value_function.pre_layers[0][1].beliefs[0]
    k = policy.comm_index(1, pair)
    assert 0 <= k < 16
    assert vf.value(1, pair) == pytest.approx(res.value)
    with pytest.raises(UnsolvedBelief):
        policy.comm_index(1, (np.array([0.123, 0.877]), pair[1]))


def test_reach_cap():
    with pytest.raises(ReachCapError):
        solve_finite(defense_finite(8), reach_cap=10)


def test_per_step_mode_weights_costs_once_per_step():
    s = defense_finite(1, rho=0.0).replace(discount_mode=DiscountMode.PER_STEP)
    s = with_initial(s, (0, 1), (0, 1))
    assert solve_finite(s).value == pytest.approx(20.0)
    s = with_initial(defense_scenario(0.3, 0.6, 0.3, 0.6, 0.5, 0.0, horizon=Finite(2),
                                      discount_mode=DiscountMode.PER_STEP), (0, 1), (0, 1))
    p = with_initial(defense_scenario(0.3, 0.6, 0.3, 0.6, 0.5, 0.0, horizon=Finite(2)), (0, 1), (0, 1))
    # the first control cost is undiscounted per step and discounted once per phase
    assert solve_finite(s).value > solve_finite(p).value


@pytest.mark.parametrize("seed", range(8))
def test_vacuous_constraints_do_not_change_the_value(seed):
    s = random_finite(seed, 3)
    free = solve_finite(s).value
    loose = s.replace(constraints=CommConstraints(s_min=0, s_max=None, max_count=None))
    assert solve_finite(loose).value == pytest.approx(free, abs=1e-9)


def test_constrained_reductions():
    s = defense_finite(10)
    never = baseline_never(s).value
    always = baseline_always(s).value
    zero = solve(s.replace(constraints=CommConstraints(max_count=0))).value
    every = solve(s.replace(constraints=CommConstraints(s_max=1))).value
    assert zero == pytest.approx(never, abs=1e-9)
    assert every == pytest.approx(always, abs=1e-9)


def test_constraints_never_help():
    s = defense_finite(8, rho=0.5)
    free = solve(s).value
    for c in (CommConstraints(s_min=2), CommConstraints(s_max=3), CommConstraints(max_count=2),
              CommConstraints(s_min=2, s_max=4, max_count=3)):
        assert solve(s.replace(constraints=c)).value >= free - 1e-9


def test_constraints_with_erasures_unsupported():
    s = defense_finite(3, erasure_prob=0.2, constraints=CommConstraints(s_max=2))
    with pytest.raises(NotImplementedError):
        solve_finite(s)


def test_report_fields():
    rep = solve_finite(defense_finite(2)).report
    assert rep["mode"] == "reachable"
    assert rep["value"] == pytest.approx(solve_finite(defense_finite(2)).value)
