"""Never-communicate and always-communicate reference strategies.

With communication in every state and no erasures the coordinator always
knows the joint state after the communication phase, so the always-share
value is that of an ordinary joint-state MDP, solved exactly here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..prescriptions import ActionSpace, PrescriptionPair
from ..scenario import Finite, Scenario
from .finite import SolveResult, solve_finite
from .discounted import DEFAULT_GRID, DEFAULT_VI_TOL, solve_discounted

POLICY_ITER_MAX = 1000


def _joint_model(s: Scenario) -> tuple:
    """Transition (X, U, X) and cost (X, U) on flattened joint states/actions."""
    a1, a2 = s.agents
    P = np.einsum("acx,bdy->abcdxy", a1.transition, a2.transition)
    n, m = a1.num_states * a2.num_states, a1.num_actions * a2.num_actions
    P = P.reshape(n, m, n)
    C = s.cost.reshape(n, m)
    return P, C


def _greedy(q: np.ndarray) -> np.ndarray:
    """Row-wise argmin with the first-index tie-break used by the solvers."""
    best = q.min(axis=1, keepdims=True)
    return np.argmax(q <= best + 1e-11 * (1.0 + np.abs(best)), axis=1)


def joint_mdp_always(s: Scenario, horizon: int | None = None) -> tuple:
    """Values before communication (per joint state) and greedy joint actions.

    Returns (W, actions) where W has shape (T, X) / (1, X) for the stationary
    case and ``actions[t, x]`` is the flattened joint action.
    """
    P, C = _joint_model(s)
    rho = s.rho_table().reshape(-1)
    dc, du = s.phase_discounts()
    n = len(rho)
    if horizon is None:
        act = np.argmin(C, axis=1)
        for _ in range(POLICY_ITER_MAX):
            Pu, cu = P[np.arange(n), act], C[np.arange(n), act]
            w_plus = np.linalg.solve(np.eye(n) - du * dc * Pu, cu + du * Pu @ rho)
            w = rho + dc * w_plus
            q = C + du * P @ w
            new = _greedy(q)
            keep = q[np.arange(n), act] <= q[np.arange(n), new] + 1e-11 * (1.0 + np.abs(q[np.arange(n), new]))
            new = np.where(keep, act, new)
            if np.array_equal(new, act):
                break
            act = new
        return w[None, :], act[None, :]
    W = np.zeros((horizon, n))
    A = np.zeros((horizon, n), dtype=np.int64)
    w_next = np.zeros(n)
    for t in range(horizon - 1, -1, -1):
        q = C + (du * P @ w_next if t + 1 < horizon else 0.0)
        A[t] = _greedy(q)
        W[t] = rho + dc * q[np.arange(n), A[t]]
        w_next = W[t]
    return W, A


@dataclass
class JointMDPPolicy:
    """Share in every state, then act on the revealed joint state."""

    scenario: Scenario
    space: ActionSpace
    values: np.ndarray
    actions: np.ndarray

    @property
    def stationary(self) -> bool:
        return len(self.actions) == 1

    def _row(self, t: int) -> np.ndarray:
        return self.actions[0 if self.stationary else t - 1]

    def comm_index(self, t, pair, cs=None) -> int:
        return self.space.always_index()

    def comm_indices(self, b1, b2, cs=None, t: int = 1) -> np.ndarray:
        return np.full(len(np.atleast_2d(b1)), self.space.always_index(), dtype=np.int64)

    def ctrl_indices(self, b1, b2, cs_plus=None, t: int = 1) -> np.ndarray:
        b1, b2 = np.atleast_2d(b1), np.atleast_2d(b2)
        x1, x2 = b1.argmax(axis=1), b2.argmax(axis=1)
        if not (np.allclose(b1.max(axis=1), 1.0) and np.allclose(b2.max(axis=1), 1.0)):
            raise ValueError("always-share policy queried at a belief that is not a point mass")
        n2 = self.scenario.shape[1]
        m2 = self.scenario.agents[1].num_actions
        u1, u2 = np.divmod(self._row(t)[x1 * n2 + x2], m2)
        # constant tables: every state of agent i maps to the chosen action
        n1s, n2s = self.scenario.shape
        a1, a2 = self.scenario.agents
        l1 = u1 * sum(a1.num_actions ** k for k in range(n1s))
        l2 = u2 * sum(a2.num_actions ** k for k in range(n2s))
        return l1 * self.space.n_ctrl[1] + l2

    def ctrl_index(self, t, pair_plus, cs_plus=None) -> int:
        return int(self.ctrl_indices(pair_plus[0], pair_plus[1], cs_plus, t)[0])

    def decide_comm(self, pair, cs=None, t: int = 1) -> PrescriptionPair:
        return self.space.comm_pair(self.space.always_index())

    def decide_ctrl(self, pair_plus, cs_plus=None, t: int = 1) -> PrescriptionPair:
        return self.space.ctrl_pair(self.ctrl_index(t, pair_plus, cs_plus))

    def node_values(self, beliefs1, beliefs2, t: int = 1) -> np.ndarray:
        """Value before communication on a product of belief sets (multi-affine)."""
        n1, n2 = self.scenario.shape
        W = self.values[0 if self.stationary else t - 1].reshape(n1, n2)
        return np.asarray(beliefs1) @ W @ np.asarray(beliefs2).T


def _generic(s: Scenario, restrict: str, grid: int, vi_tol: float) -> SolveResult:
    if isinstance(s.horizon, Finite):
        return solve_finite(s, restrict=restrict)
    return solve_discounted(s, grid, vi_tol=vi_tol, restrict=restrict)


def baseline_never(scenario: Scenario, grid: int = DEFAULT_GRID, vi_tol: float = DEFAULT_VI_TOL) -> SolveResult:
    """Optimal control with communication switched off."""
    return _generic(scenario.replace(constraints=None), "silent", grid, vi_tol)


def baseline_always(scenario: Scenario, grid: int = DEFAULT_GRID, vi_tol: float = DEFAULT_VI_TOL) -> SolveResult:
    """Optimal control when both agents share their state at every step."""
    s = scenario.replace(constraints=None)
    if s.erasure_prob > 0.0:
        return _generic(s, "always", grid, vi_tol)
    T = s.horizon.T if isinstance(s.horizon, Finite) else None
    W, A = joint_mdp_always(s, T)
    policy = JointMDPPolicy(s, ActionSpace(s), W, A)
    p1, p2 = s.initial_pair()
    value = float(np.outer(p1, p2).reshape(-1) @ W[0])
    report = {"scenario": s.digest(), "mode": "joint-mdp", "restrict": "always",
              "horizon": T if T is not None else "discounted", "value": value}
    return SolveResult(None, policy, report)

