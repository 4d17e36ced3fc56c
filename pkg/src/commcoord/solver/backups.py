"""Single-belief Bellman backups written directly from the belief filters.

These are slow reference versions of the vectorized engine: they take value
functions as plain callables, which makes them handy for checking a solve at
arbitrary beliefs and for one-step lookahead decisions.
"""
from __future__ import annotations

import numpy as np

from .. import belief as bf
from ..prescriptions import PrescriptionPair, enumerate_comm_pairs, enumerate_ctrl_pairs
from ..scenario import Observation, Scenario
from .constraints import ConstraintModel
from .engine import PROB_FLOOR, tie_tolerance


class InfeasibleConstraint(RuntimeError):
    pass


def expected_cost(pair_plus, lam: PrescriptionPair, scenario: Scenario) -> float:
    p1, p2 = pair_plus
    a1, a2 = np.asarray(lam.first.actions), np.asarray(lam.second.actions)
    n1, n2 = scenario.shape
    c = scenario.cost[np.arange(n1)[:, None], np.arange(n2)[None, :], a1[:, None], a2[None, :]]
    return float(p1 @ c @ p2)


def _argmin(candidates):
    best, arg = None, None
    for value, item in candidates:
        if best is None or value < best - float(tie_tolerance(best)):
            arg = item
        best = value if best is None else min(best, value)
    return best, arg


def control_backup(pair_plus, v_next, scenario: Scenario) -> tuple:
    """min over control pairs of expected cost + discount * v_next(beta(pair, lambda)).

    ``v_next`` is a callable on belief pairs, or None at the last step.
    """
    _, du = scenario.phase_discounts()
    p1, p2 = (np.asarray(p, dtype=float) for p in pair_plus)
    a1, a2 = scenario.agents

    def score(lam):
        q = expected_cost((p1, p2), lam, scenario)
        if v_next is not None:
            q += du * v_next((bf.beta(p1, lam.first, a1), bf.beta(p2, lam.second, a2)))
        return q

    return _argmin((score(lam), lam) for lam in enumerate_ctrl_pairs(scenario))


def _feasible_comm_pairs(scenario: Scenario, cstate, model: ConstraintModel | None) -> list:
    pairs = enumerate_comm_pairs(scenario)
    if cstate is None or model is None or not model.active:
        return pairs
    silent_ok, comm_ok = model.branch_ok(model.canon(cstate))
    if silent_ok and comm_ok:
        return pairs
    if silent_ok:
        return pairs[:1]
    if comm_ok:
        return pairs[-1:]
    raise InfeasibleConstraint(f"constraint state {tuple(cstate)} demands a communication but the budget is spent")


def comm_backup(pair, v_plus, scenario: Scenario, cstate=None, model: ConstraintModel | None = None) -> tuple:
    """min over feasible communication pairs of rho-term + expected v_plus after the outcome.

    Without constraints ``v_plus`` takes a belief pair; with a constraint
    state it takes (belief pair, post-communication constraint state).
    """
    dc, _ = scenario.phase_discounts()
    p1, p2 = (np.asarray(p, dtype=float) for p in pair)
    rho = scenario.rho_table()
    p_e = scenario.erasure_prob
    constrained = cstate is not None and model is not None and model.active

    def future(b, sent: bool):
        if not constrained:
            return v_plus(b)
        cs = model.canon(cstate)
        return v_plus(b, model.after_comm(cs) if sent else model.after_silence(cs))

    def score(gamma):
        g1, g2 = gamma.first.bits(), gamma.second.bits()
        sent = np.maximum(g1[:, None], g2[None, :])
        q = float(p1 @ (rho * sent) @ p2)
        acc = 0.0
        for z, prob in bf.erasure_outcome_probs((p1, p2), gamma, p_e).items():
            if prob <= PROB_FLOOR:
                continue
            post = (bf.eta_erasure(p1, gamma.first, z, z.m, p_e, agent=0),
                    bf.eta_erasure(p2, gamma.second, z, z.m, p_e, agent=1))
            acc += prob * future(post, tuple(z.m) != (0, 0))
        return q + dc * acc

    return _argmin((score(g), g) for g in _feasible_comm_pairs(scenario, cstate, model))


def outcome_of(gamma: PrescriptionPair, x) -> Observation:
    """Outcome of the communication phase without erasures for joint state x."""
    m = (gamma.first(x[0]), gamma.second(x[1]))
    return Observation(tuple(x) if m != (0, 0) else None, m)
