import numpy as np
import pytest

from commcoord.prescriptions import (ActionSpace, CommPrescription, CtrlPrescription, EnumerationCapError,
                                     PrescriptionPair, count_comm_pairs, count_ctrl_pairs, enumerate_comm_pairs,
                                     enumerate_ctrl_pairs, evaluate)
from commcoord.scenario import random_scenario, table3_scenario


def test_defense_counts():
    s = table3_scenario()
    assert count_comm_pairs(s) == 16
    assert count_ctrl_pairs(s) == 16
    assert len(enumerate_comm_pairs(s)) == 16
    assert len(enumerate_ctrl_pairs(s)) == 16


def test_counts_for_unequal_agents(rng):
    s = random_scenario(rng, n_states=(3, 1), n_actions=(2, 3))
    assert count_comm_pairs(s) == 2 ** 3 * 2 ** 1
    assert count_ctrl_pairs(s) == 2 ** 3 * 3 ** 1


def test_single_state_single_action_has_one_control_pair(rng):
    s = random_scenario(rng, n_states=(1, 1), n_actions=(1, 1))
    assert count_ctrl_pairs(s) == 1
    assert count_comm_pairs(s) == 4


def test_comm_masks_bit_order():
    g = CommPrescription(0b10, 2)
    assert evaluate(g, 0) == 0 and evaluate(g, 1) == 1
    np.testing.assert_array_equal(g.bits(), [0, 1])
    assert CommPrescription.always(3).mask == 7
    assert CommPrescription.silent(3).mask == 0
    with pytest.raises(ValueError):
        CommPrescription(4, 2)


def test_enumeration_order_is_lexicographic():
    s = table3_scenario()
    pairs = enumerate_comm_pairs(s)
    assert pairs[0] == PrescriptionPair(CommPrescription(0, 2), CommPrescription(0, 2))
    assert pairs[-1] == PrescriptionPair(CommPrescription(3, 2), CommPrescription(3, 2))
    ctrl = enumerate_ctrl_pairs(s)
    assert ctrl[1] == PrescriptionPair(CtrlPrescription((0, 0)), CtrlPrescription((0, 1)))


def test_action_space_indices_round_trip():
    s = table3_scenario()
    space = ActionSpace(s)
    for k, pair in enumerate(enumerate_comm_pairs(s)):
        assert space.comm_pair(k) == pair
        assert space.comm_index(pair) == k
    for k, pair in enumerate(enumerate_ctrl_pairs(s)):
        assert space.ctrl_pair(k) == pair
        assert space.ctrl_index(pair) == k
    assert space.comm_pair(space.always_index()) == PrescriptionPair(CommPrescription(3, 2), CommPrescription(3, 2))


def test_enumeration_cap(rng):
    s = random_scenario(rng, n_states=(3, 3), n_actions=(3, 3))
    with pytest.raises(EnumerationCapError):
        enumerate_ctrl_pairs(s, cap=100)
    with pytest.raises(EnumerationCapError):
        ActionSpace(s, cap=100)


def test_render_uses_action_labels():
    s = table3_scenario()
    lam = PrescriptionPair(CtrlPrescription((0, 1)), CtrlPrescription((1, 1)))
    text = lam.render(s)
    labels = s.agents[0].action_labels
    assert labels[0] in text and labels[1] in text
    gam = PrescriptionPair(CommPrescription(1, 2), CommPrescription(0, 2))
    assert gam.render() == "γ¹=[1,0] γ²=[0,0]"
