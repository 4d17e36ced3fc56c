"""Vectorized Bellman backups over products of per-agent belief sets.

Both solve modes share this code.  A solve mode supplies, for each agent,
finite sets of beliefs before and after the communication phase together
with sparse operators that map value tables on the successor set back onto
the source set:

* ``eta[(mask, m)]`` (pre -> post-communication) for the silent outcome
  (m = 0) and, with erasures, for an erased attempt revealing bit m;
* ``beta[l]`` (post-communication -> next pre-communication set) for each
  control prescription index l of that agent.

For the reachable-set mode each operator row holds a single 1 (exact
lookup); for the grid mode rows hold interpolation weights.  Value tables
are 2-d arrays indexed [belief of agent 1, belief of agent 2].
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..prescriptions import ActionSpace
from ..scenario import Scenario
from .constraints import ConstraintModel

PROB_FLOOR = 1e-12


def tie_tolerance(v: np.ndarray) -> np.ndarray:
    return 1e-11 * (1.0 + np.abs(v))


@dataclass
class AgentOps:
    pre: np.ndarray
    plus: np.ndarray
    delta: np.ndarray
    eta: dict = field(default_factory=dict)
    mass: dict = field(default_factory=dict)
    beta: list = field(default_factory=list)


def post_transition_matrix(transition: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """(n, n) matrix R with belief' = belief @ R under prescription ``actions``."""
    n = transition.shape[0]
    return transition[np.arange(n), actions]


def condition_rows(beliefs: np.ndarray, keep: np.ndarray) -> tuple:
    """Condition each row on the state subset ``keep``; returns (posteriors, masses)."""
    w = beliefs * keep[None, :]
    mass = w.sum(axis=1)
    post = np.divide(w, mass[:, None], out=np.zeros_like(w), where=mass[:, None] > 0)
    return post, mass


class Backup:
    """Communication and control backups for one scenario."""

    def __init__(self, scenario: Scenario, space: ActionSpace, model: ConstraintModel,
                 erasure: bool = False, restrict: str | None = None):
        if restrict not in (None, "silent", "always"):
            raise ValueError(f"unknown communication restriction {restrict!r}")
        self.s = scenario
        self.space = space
        self.model = model
        self.erasure = erasure
        self.p_e = scenario.erasure_prob if erasure else 0.0
        self.restrict = restrict
        self.comm_disc, self.ctrl_disc = scenario.phase_discounts()
        n1, n2 = scenario.shape
        m1, m2 = space.masks
        ix1, ix2 = np.arange(n1)[:, None], np.arange(n2)[None, :]
        t1, t2 = space.tables
        self.cost_mats = [
            scenario.cost[ix1, ix2, t1[l1][ix1], t2[l2][ix2]]
            for l1 in range(len(t1)) for l2 in range(len(t2))
        ]
        self.comm_or = [np.maximum(m1[g1][:, None], m2[g2][None, :]).astype(float)
                        for g1 in range(len(m1)) for g2 in range(len(m2))]
        rho = scenario.rho_table()
        self.rho_mats = [rho * mor for mor in self.comm_or]

    def phi_outcomes(self):
        """Decision pairs that can end in no delivered state."""
        if self.erasure:
            return [(0, 0), (0, 1), (1, 0), (1, 1)]
        return [(0, 0)]

    def comm_candidates(self, silent_ok: bool = True, comm_ok: bool = True) -> list:
        """Prescription pair indices allowed when staying silent and/or sharing is permitted."""
        always = self.space.always_index()
        if self.restrict == "silent":
            silent_ok, comm_ok = silent_ok, False
        elif self.restrict == "always":
            silent_ok = False
        if silent_ok and comm_ok:
            return list(range(len(self.comm_or)))
        if silent_ok:
            return [0]
        if comm_ok:
            return [always]
        return []

    # -- control phase -----------------------------------------------------
    def control(self, ops1: AgentOps, ops2: AgentOps, v_next: np.ndarray | None):
        """V+ on plus1 x plus2 given the next-step value table (None = terminal)."""
        B1, B2 = ops1.plus, ops2.plus
        n_l2 = self.space.n_ctrl[1]
        best = arg = None
        if v_next is not None:
            left = [W1 @ v_next for W1 in ops1.beta]
        for k, C in enumerate(self.cost_mats):
            q = B1 @ C @ B2.T
            if v_next is not None:
                l1, l2 = divmod(k, n_l2)
                q = q + self.ctrl_disc * np.asarray(ops2.beta[l2] @ left[l1].T).T
            best, arg = _running_min(best, arg, q, k)
        return best, arg

    # -- communication phase -----------------------------------------------
    def communication(self, ops1: AgentOps, ops2: AgentOps, v_plus_silent, v_plus_comm, candidates):
        """V on pre1 x pre2.

        ``v_plus_silent`` is the post-communication table reached when nothing
        is delivered, ``v_plus_comm`` the one reached after a delivery; either
        may be None when no candidate can reach it.
        """
        B1, B2 = ops1.pre, ops2.pre
        shape = (len(B1), len(B2))
        if not candidates:
            return np.full(shape, np.inf), np.full(shape, -1, dtype=np.int64)
        n_g2 = self.space.n_comm[1]
        m1, m2 = self.space.masks
        if v_plus_comm is None:
            v_delta = np.zeros((len(ops1.delta), len(ops2.delta)))
        else:
            v_delta = v_plus_comm[np.ix_(ops1.delta, ops2.delta)]
        best = arg = None
        for k in candidates:
            g1, g2 = divmod(k, n_g2)
            q = B1 @ self.rho_mats[k] @ B2.T
            future = B1 @ ((1.0 - self.p_e) * self.comm_or[k] * v_delta) @ B2.T
            if v_plus_silent is None:
                q = q + self.comm_disc * future
                best, arg = _running_min(best, arg, q, k)
                continue
            for m in self.phi_outcomes():
                if m != (0, 0) and not (np.any(m1[g1] == m[0]) and np.any(m2[g2] == m[1])):
                    continue
                key1, key2 = (int(g1), m[0]), (int(g2), m[1])
                prob = np.outer(ops1.mass[key1], ops2.mass[key2])
                if m != (0, 0):
                    prob = self.p_e * prob
                val = np.asarray(ops2.eta[key2] @ np.asarray(ops1.eta[key1] @ v_plus_silent).T).T
                future += np.where(prob > PROB_FLOOR, prob * val, 0.0)
            q = q + self.comm_disc * future
            best, arg = _running_min(best, arg, q, k)
        return best, arg


def _running_min(best, arg, q, k):
    if best is None:
        return q.copy(), np.full(q.shape, k, dtype=np.int64)
    better = q < best - tie_tolerance(best)
    np.copyto(arg, k, where=better)
    np.minimum(best, q, out=best)
    return best, arg


def one_hot(rows: np.ndarray, n_cols: int, valid=None) -> sp.csr_matrix:
    rows = np.asarray(rows, dtype=np.int64)
    data = np.ones(len(rows)) if valid is None else np.asarray(valid, dtype=float)
    M = sp.csr_matrix((data, (np.arange(len(rows)), np.where(rows < 0, 0, rows))), shape=(len(rows), n_cols))
    M.eliminate_zeros()
    return M
