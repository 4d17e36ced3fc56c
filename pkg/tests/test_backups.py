import numpy as np
import pytest

from commcoord.prescriptions import ActionSpace
from commcoord.scenario import CommConstraints, random_scenario, table3_scenario
from commcoord.solver import comm_backup, control_backup, solve_discounted, solve_finite
from commcoord.solver.backups import InfeasibleConstraint, outcome_of
from commcoord.solver.constraints import ConstraintModel
from helpers import defense_finite, random_finite


@pytest.mark.parametrize("seed", range(6))
def test_scalar_backups_match_reachable_tables(seed):
    s = random_finite(seed, 2, erasure_prob=0.3 if seed % 2 else 0.0)
    res = solve_finite(s)
    vf, policy = res
    pair = s.initial_pair()

    def v_next(p):
        return vf.value(2, p)

    def v_plus(t):
        return lambda p: control_backup(p, v_next if t == 1 else None, s)[0]

    v, gamma = comm_backup(pair, v_plus(1), s)
    assert v == pytest.approx(res.value, abs=1e-9)
    assert ActionSpace(s).comm_index(gamma) == policy.comm_index(1, pair)


def test_scalar_backups_match_grid_at_nodes():
    s = table3_scenario(1.0)
    res = solve_discounted(s, grid=11, vi_tol=1e-10)
    vf = res.value_function
    g1, g2 = vf.grids
    i, j = 3, 7
    pair = (g1.nodes[i], g2.nodes[j])
    v, _ = comm_backup(pair, lambda p: control_backup(p, vf.value, s)[0], s)
    # fixed point at the node, up to the value-iteration tolerance
    assert v == pytest.approx(vf.table()[i, j], abs=1e-6)


def test_constrained_comm_backup_restricts_candidates():
    s = defense_finite(4, constraints=CommConstraints(s_max=1))
    model = ConstraintModel(s.constraints, 4)
    v, gamma = comm_backup(s.initial_pair(), lambda p, cs: 0.0, s, cstate=model.initial, model=model)
    assert gamma.first.mask == 3 and gamma.second.mask == 3
    s = defense_finite(4, constraints=CommConstraints(s_max=2, max_count=2))
    model = ConstraintModel(s.constraints, 4)
    with pytest.raises(InfeasibleConstraint):
        comm_backup(s.initial_pair(), lambda p, cs: 0.0, s, cstate=(2, 2), model=model)


def test_outcome_of():
    from commcoord.prescriptions import CommPrescription, PrescriptionPair
    g = PrescriptionPair(CommPrescription(2, 2), CommPrescription(0, 2))
    assert outcome_of(g, (0, 1)).z is None
    assert outcome_of(g, (1, 1)).z == (1, 1)


def test_control_backup_terminal_is_min_expected_cost(rng):
    s = random_scenario(rng)
    pair = (rng.dirichlet([1, 1]), rng.dirichlet([1, 1]))
    v, lam = control_backup(pair, None, s)
    _, du = s.phase_discounts()
    best = min(pair[0] @ s.cost[:, :, a, b] @ pair[1] for a in range(2) for b in range(2))
    # constant tables are among the candidates, state-dependent ones can only do better
    assert v <= best + 1e-12
