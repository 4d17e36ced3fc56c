import pytest

from commcoord.scenario import CommConstraints
from commcoord.solver.constraints import FORCED, FREE, INFEASIBLE, SILENT, ConstraintModel, ConstraintState


def test_inactive_model():
    m = ConstraintModel(None)
    assert not m.active
    assert m.status(m.initial) == FREE


def test_s_max_one_forces_every_step():
    m = ConstraintModel(CommConstraints(s_max=1), horizon=5)
    assert m.active
    cs = m.initial
    for _ in range(5):
        assert m.status(cs) == FORCED
        cs = m.next_if_comm(cs)


def test_min_spacing_silences_after_communication():
    m = ConstraintModel(CommConstraints(s_min=3), horizon=10)
    cs = m.next_if_comm(m.initial)
    assert cs == ConstraintState(1, 0)
    assert m.status(cs) == SILENT
    cs = m.next_if_silent(cs)
    assert m.status(cs) == SILENT
    cs = m.next_if_silent(cs)
    assert m.status(cs) == FREE


@pytest.mark.parametrize("s_max,budget,expected", [(2, 0, INFEASIBLE), (2, 1, FORCED), (None, 0, SILENT)])
def test_status_table(s_max, budget, expected):
    m = ConstraintModel(CommConstraints(s_max=s_max, max_count=budget), horizon=10)
    assert m.status(ConstraintState(2, 0)) == expected


def test_budget_at_least_horizon_is_unbounded():
    m = ConstraintModel(CommConstraints(max_count=10), horizon=10)
    assert m.budget is None and not m.active


def test_viability_excludes_dead_ends():
    # s_max=3 with budget 2 over 8 steps: silent at the start must still leave
    # room to communicate every third step
    m = ConstraintModel(CommConstraints(s_max=3, max_count=2), horizon=8)
    viable = m.viable(8)
    assert m.initial in viable[0]
    for t, layer in enumerate(viable):
        for cs in layer:
            assert m.status(cs) != INFEASIBLE
            if t + 1 < len(viable):
                s_ok, c_ok = m.branch_ok(cs, viable[t + 1])
                assert s_ok or c_ok


def test_budget_zero_blocks_all_communication():
    m = ConstraintModel(CommConstraints(max_count=0), horizon=4)
    for layer in m.layers(4):
        for cs in layer:
            assert m.branch_ok(cs) == (True, False)
