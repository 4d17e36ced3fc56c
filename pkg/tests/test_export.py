import numpy as np
import pytest

from commcoord.export import UnsupportedFeature, build_flat_pomdp, export_pomdp, parse_pomdp
from commcoord.scenario import CommConstraints, TableCommCost, table3_scenario


def test_defense_counts():
    model = build_flat_pomdp(table3_scenario(1.0))
    assert len(model.states) == 8
    assert len(model.actions) == 32
    assert len(model.observations) == 6


def test_rows_are_stochastic():
    m = build_flat_pomdp(table3_scenario(1.0))
    np.testing.assert_allclose(m.transition.sum(axis=2), 1.0)
    np.testing.assert_allclose(m.observation.sum(axis=2), 1.0)
    assert m.start.sum() == pytest.approx(1.0)


def test_round_trip():
    s = table3_scenario(2.0)
    text = export_pomdp(s, "scenario: test")
    assert text.startswith("# scenario: test\n")
    back = parse_pomdp(text)
    assert back.same_structure(build_flat_pomdp(s))
    assert back.penalty == pytest.approx(build_flat_pomdp(s).penalty)


def test_wrong_phase_actions_self_loop_with_penalty():
    m = build_flat_pomdp(table3_scenario(1.0))
    ctrl_state, comm_action = m.states.index("x0_0_ctrl"), 0
    assert m.transition[comm_action, ctrl_state, ctrl_state] == 1.0
    assert m.reward[comm_action, ctrl_state] == -m.penalty
    assert m.penalty == pytest.approx(10 * 170 / 0.05)


def test_communication_reveals_state():
    m = build_flat_pomdp(table3_scenario(1.0))
    a = m.actions.index("g3_3")
    s2 = m.states.index("x1_0_ctrl")
    assert m.observation[a, s2, m.observations.index("z1_0")] == 1.0
    silent = m.actions.index("g0_0")
    assert m.observation[silent, s2, m.observations.index("phi")] == 1.0


@pytest.mark.parametrize("change", [
    {"erasure_prob": 0.1},
    {"constraints": CommConstraints(s_max=3)},
    {"comm_cost": TableCommCost(np.ones((2, 2)))},
])
def test_unsupported_features(change):
    with pytest.raises(UnsupportedFeature):
        build_flat_pomdp(table3_scenario(1.0).replace(**change))
