"""Exact small-instance oracles that do not use the factored belief filters.

* :func:`exact_joint_filter` enumerates joint state trajectories.
* :func:`brute_force_T1` enumerates decentralized strategy profiles
  (communication rule on the local state, control rule on the local state
  and the public outcome) for a single step.
* :func:`coordinator_tree_search` searches the coordinator's decision tree
  with Bayes updates on the joint state distribution; ``brute_force_T2`` is
  depth 2.
"""
from __future__ import annotations

import itertools

import numpy as np

from ..prescriptions import DEFAULT_ENUMERATION_CAP, ActionSpace, EnumerationCapError
from ..scenario import Observation, Scenario


class InconsistentHistory(ValueError):
    """The observation sequence has probability zero."""


def _likelihood(obs: Observation, m: tuple, x: tuple, p_e: float) -> float:
    if tuple(obs.m) != m:
        return 0.0
    if m == (0, 0):
        return 1.0 if obs.z is None else 0.0
    if obs.z is None:
        return p_e
    return (1.0 - p_e) if tuple(obs.z) == tuple(x) else 0.0


def exact_joint_filter(scenario: Scenario, prescriptions, observations) -> np.ndarray:
    """P(x1, x2 | history) by enumerating joint state trajectories.

    ``prescriptions`` alternates communication and control pairs
    (gamma_1, lambda_1, gamma_2, ...); ``observations`` holds the outcome of
    each communication phase.  The result is the joint distribution after
    the last prescription, as an (n1, n2) array.
    """
    a1, a2 = scenario.agents
    n1, n2 = scenario.shape
    p_e = scenario.erasure_prob
    prescriptions = list(prescriptions)
    n_comm = (len(prescriptions) + 1) // 2
    if len(observations) != n_comm:
        raise ValueError(f"{n_comm} communication phases but {len(observations)} observations")
    states = [(i, j) for i in range(n1) for j in range(n2)]
    steps = len(prescriptions) // 2 + 1
    final = np.zeros((n1, n2))
    for path in itertools.product(states, repeat=steps):
        w = a1.initial[path[0][0]] * a2.initial[path[0][1]]
        for k, pres in enumerate(prescriptions):
            if w == 0.0:
                break
            x = path[k // 2]
            if k % 2 == 0:
                m = (pres.first(x[0]), pres.second(x[1]))
                w *= _likelihood(observations[k // 2], m, x, p_e)
            else:
                y = path[k // 2 + 1]
                w *= a1.transition[x[0], pres.first(x[0]), y[0]] * a2.transition[x[1], pres.second(x[1]), y[1]]
        if w == 0.0:
            continue
        final[path[len(prescriptions) // 2]] += w
    total = final.sum()
    if total <= 0.0:
        raise InconsistentHistory("observation history has probability zero")
    return final / total


# -- single-step decentralized enumeration ------------------------------------

def _outcomes(x, f1, f2, p_e):
    """(observation, probability) pairs of one communication phase at joint state x."""
    m = (int(f1[x[0]]), int(f2[x[1]]))
    if m == (0, 0):
        return [(("phi", m), 1.0)]
    out = []
    if p_e < 1.0:
        out.append(((tuple(x), m), 1.0 - p_e))
    if p_e > 0.0:
        out.append((("phi", m), p_e))
    return out


def brute_force_T1(scenario: Scenario, cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """Optimal one-step cost over all decentralized strategy profiles.

    Agent i communicates by f_i(x_i) and acts by g_i(x_i, outcome) where the
    outcome is the public (z, m) of the communication phase.
    """
    a1, a2 = scenario.agents
    n1, n2 = scenario.shape
    k1, k2 = a1.num_actions, a2.num_actions
    p_e = scenario.erasure_prob
    rho = scenario.rho_table()
    w_comm, w_ctrl = scenario.step_weights(1)
    joint = np.outer(a1.initial, a2.initial)
    best = np.inf
    for f1 in itertools.product((0, 1), repeat=n1):
        for f2 in itertools.product((0, 1), repeat=n2):
            events = []
            for x in itertools.product(range(n1), range(n2)):
                if joint[x] == 0.0:
                    continue
                for o, p in _outcomes(x, f1, f2, p_e):
                    events.append((x, o, joint[x] * p))
            info1 = sorted({(x[0], o) for x, o, _ in events}, key=repr)
            info2 = sorted({(x[1], o) for x, o, _ in events}, key=repr)
            idx1 = {k: i for i, k in enumerate(info1)}
            idx2 = {k: i for i, k in enumerate(info2)}
            count = k1 ** len(info1) * k2 ** len(info2)
            if count > cap:
                raise EnumerationCapError(f"{count} control profiles exceed the cap {cap}")
            G1 = np.array(list(itertools.product(range(k1), repeat=len(info1))), dtype=np.int64).reshape(-1, len(info1))
            G2 = np.array(list(itertools.product(range(k2), repeat=len(info2))), dtype=np.int64).reshape(-1, len(info2))
            ctrl = np.zeros((len(G1), len(G2)))
            comm = 0.0
            for x, o, p in events:
                if o[1] != (0, 0):
                    comm += p * rho[x]
                u1 = G1[:, idx1[(x[0], o)]]
                u2 = G2[:, idx2[(x[1], o)]]
                ctrl += p * scenario.cost[x[0], x[1]][u1[:, None], u2[None, :]]
            best = min(best, w_comm * comm + w_ctrl * float(ctrl.min()))
    return float(best)


# -- coordinator tree search on joint beliefs ---------------------------------

class _Tree:
    def __init__(self, scenario: Scenario, T: int):
        self.s = scenario
        self.T = T
        self.space = ActionSpace(scenario)
        self.dc, self.du = scenario.phase_discounts()
        self.memo = {}
        a1, a2 = scenario.agents
        n1, n2 = scenario.shape
        self.rho = scenario.rho_table()
        self.sent = []
        for k in range(self.space.n_comm[0] * self.space.n_comm[1]):
            g = self.space.comm_pair(k)
            self.sent.append((g.first.bits(), g.second.bits()))
        t1, t2 = self.space.tables
        ix1, ix2 = np.arange(n1)[:, None], np.arange(n2)[None, :]
        self.cost = np.array([scenario.cost[ix1, ix2, r1[ix1], r2[ix2]] for r1 in t1 for r2 in t2])
        # joint kernel per control pair: K[l][x1, x2, y1, y2]
        self.kernel = np.array([np.einsum("ay,bz->abyz", a1.transition[np.arange(n1), r1],
                                          a2.transition[np.arange(n2), r2]) for r1 in t1 for r2 in t2])

    def outcomes(self, P, k):
        """(probability, posterior) of every outcome of comm pair k under joint belief P."""
        b1, b2 = self.sent[k]
        p_e = self.s.erasure_prob
        out = []
        for m1 in (0, 1):
            for m2 in (0, 1):
                sel = (b1[:, None] == m1) & (b2[None, :] == m2)
                mass = float(P[sel].sum())
                if mass <= 0.0:
                    continue
                if (m1, m2) == (0, 0):
                    out.append((mass, np.where(sel, P, 0.0) / mass))
                    continue
                if p_e > 0.0:
                    out.append((p_e * mass, np.where(sel, P, 0.0) / mass))
                if p_e < 1.0:
                    for x in zip(*np.nonzero(sel & (P > 0))):
                        D = np.zeros_like(P)
                        D[x] = 1.0
                        out.append(((1.0 - p_e) * P[x], D))
        return out

    def value(self, P, t: int) -> float:
        key = (t, P.tobytes())
        if key in self.memo:
            return self.memo[key]
        best = np.inf
        for k in range(len(self.sent)):
            b1, b2 = self.sent[k]
            q = float((P * self.rho * np.maximum(b1[:, None], b2[None, :])).sum())
            for prob, post in self.outcomes(P, k):
                q += self.dc * prob * self.value_plus(post, t)
            best = min(best, q)
        self.memo[key] = best
        return best

    def value_plus(self, P, t: int) -> float:
        stage = self.cost.reshape(len(self.cost), -1) @ P.reshape(-1)
        if t == self.T:
            return float(stage.min())
        nxt = np.einsum("ab,labyz->lyz", P, self.kernel)
        return float(min(stage[l] + self.du * self.value(nxt[l], t + 1) for l in range(len(stage))))


def coordinator_tree_search(scenario: Scenario, T: int) -> float:
    """Optimal cost over all coordinator strategies of depth T (exhaustive)."""
    tree = _Tree(scenario, T)
    P = np.outer(*scenario.initial_pair())
    return tree.value(P, 1)


def brute_force_T2(scenario: Scenario) -> float:
    return coordinator_tree_search(scenario, 2)


def factorization_error(P: np.ndarray) -> float:
    """max |P(x1, x2) - P1(x1) P2(x2)|."""
    return float(np.abs(P - np.outer(P.sum(axis=1), P.sum(axis=0))).max())

