import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from commcoord.belief import (IllegalOutcome, ZeroNormalizer, as_belief, base_outcome_probs, beta, delta,
                              erasure_outcome_probs, eta, eta_erasure, prob_comm_outcome, prob_no_comm, run_filter,
                              silent_mass)
from commcoord.prescriptions import CommPrescription, CtrlPrescription
from commcoord.scenario import Observation, random_scenario, table3_scenario


def test_eta_silent_conditions_on_silence():
    np.testing.assert_allclose(eta([0.4, 0.6], [0, 1], None), [1.0, 0.0])
    np.testing.assert_allclose(eta([0.2, 0.3, 0.5], [1, 0, 0], None), [0.0, 0.375, 0.625])


def test_eta_delivered_state_gives_point_mass():
    np.testing.assert_array_equal(eta([0.4, 0.6], [0, 1], (1, 0), agent=0), [0.0, 1.0])
    np.testing.assert_array_equal(eta([0.4, 0.6], [0, 1], (1, 0), agent=1), [1.0, 0.0])


def test_eta_zero_normalizer():
    with pytest.raises(ZeroNormalizer):
        eta([0.4, 0.6], [1, 1], None)


def test_beta_defense_example():
    s = table3_scenario()
    # agent 1 (pa=0.3, pv=0.6): from healthy under "do nothing" the attack rate applies
    np.testing.assert_allclose(beta([1.0, 0.0], [0, 0], s.agents[0]), [0.7, 0.3])
    np.testing.assert_allclose(beta([0.0, 1.0], [0, 1], s.agents[0]), [0.6, 0.4])


def test_outcome_probabilities():
    pair = ([0.4, 0.6], [0.5, 0.5])
    gamma = ([0, 1], [0, 0])
    assert prob_no_comm(pair, gamma) == pytest.approx(0.4)
    assert prob_comm_outcome(pair, gamma, (1, 0)) == pytest.approx(0.3)
    assert prob_comm_outcome(pair, gamma, (0, 1)) == 0.0
    assert silent_mass([0.4, 0.6], CommPrescription(2, 2)) == pytest.approx(0.4)


def _random_simplex(rng, n):
    return rng.dirichlet(np.ones(n))


def test_filters_stay_normalized_over_random_draws(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        b = _random_simplex(rng, n)
        P = rng.dirichlet(np.ones(n), size=(n, 2))
        from commcoord.scenario import AgentDynamics
        dyn = AgentDynamics(P, np.full(n, 1.0 / n))
        nb = beta(b, rng.integers(0, 2, size=n), dyn)
        assert abs(nb.sum() - 1.0) <= 1e-12 and np.all(nb >= 0)
        g = rng.integers(0, 2, size=n)
        if b[g == 0].sum() > 0:
            post = eta(b, g, None)
            assert abs(post.sum() - 1.0) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=5), st.integers(0, 31))
def test_eta_silent_is_idempotent(weights, mask):
    b = np.asarray(weights) / np.sum(weights)
    g = CommPrescription(mask % (1 << len(b)), len(b))
    if silent_mass(b, g) == 0.0:
        return
    once = eta(b, g, None)
    np.testing.assert_allclose(eta(once, g, None), once, atol=1e-15)


def test_eta_erasure_reduces_to_base():
    b = np.array([0.2, 0.3, 0.5])
    g = [1, 0, 1]
    np.testing.assert_allclose(eta_erasure(b, g, None, (0, 0), 0.0), eta(b, g, None))
    np.testing.assert_array_equal(eta_erasure(b, g, (2, 0), (1, 0), 0.0), eta(b, g, (2, 0)))
    with pytest.raises(IllegalOutcome):
        eta_erasure(b, g, None, (1, 0), 0.0)
    with pytest.raises(IllegalOutcome):
        eta_erasure(b, g, (1, 1), (0, 0), 0.3)


def test_eta_erasure_conditions_on_decision_bit():
    b = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(eta_erasure(b, [1, 0, 1], None, (1, 0), 0.3, agent=0), [2 / 7, 0.0, 5 / 7])
    np.testing.assert_allclose(eta_erasure(b, [1, 0, 1], None, (1, 0), 0.3, agent=1), [0.0, 1.0, 0.0])


def test_outcome_distributions_reduce_when_no_erasures(rng):
    for _ in range(1000):
        n1, n2 = rng.integers(1, 4, size=2)
        pair = (_random_simplex(rng, n1), _random_simplex(rng, n2))
        gamma = (rng.integers(0, 2, size=n1), rng.integers(0, 2, size=n2))
        a, b = erasure_outcome_probs(pair, gamma, 0.0), base_outcome_probs(pair, gamma)
        assert a.keys() == b.keys()
        for k in a:
            assert a[k] == b[k]
        assert sum(a.values()) == pytest.approx(1.0, abs=1e-12)
        e = erasure_outcome_probs(pair, gamma, float(rng.uniform()))
        assert sum(e.values()) == pytest.approx(1.0, abs=1e-12)


def test_run_filter_two_steps():
    s = table3_scenario()
    g_silent = (CommPrescription(0, 2), CommPrescription(0, 2))
    lam = (CtrlPrescription((0, 0)), CtrlPrescription((0, 0)))
    b1, b2 = run_filter(s, [g_silent, lam, g_silent], [Observation(None, (0, 0))] * 2)
    p1 = beta(s.agents[0].initial, (0, 0), s.agents[0])
    np.testing.assert_allclose(b1, p1)
    p2 = beta(s.agents[1].initial, (0, 0), s.agents[1])
    np.testing.assert_allclose(b2, p2)


def test_as_belief_and_delta():
    np.testing.assert_array_equal(delta(3, 1), [0, 1, 0])
    with pytest.raises(ValueError):
        as_belief([0.5, 0.6])
    with pytest.raises(ValueError):
        as_belief([-0.1, 1.1])
