"""Exact finite-horizon solve over the beliefs reachable from the initial pair.

Each agent's reachable beliefs are built layer by layer (they only depend on
that agent's dynamics and on the prescriptions, not on the other agent), and
value tables are computed on the full product of the two per-agent sets.
The product is a superset of the jointly reachable pairs, so values stay
exact.  Beliefs are interned on integer keys ``round(b * 1e9)``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..prescriptions import ActionSpace, PrescriptionPair
from ..scenario import Finite, Scenario
from .constraints import ConstraintModel
from .engine import AgentOps, Backup, condition_rows, one_hot, post_transition_matrix

QUANT = 1e9
DEFAULT_REACH_CAP = 10 ** 6
DEFAULT_CELL_CAP = 2 * 10 ** 7


class ReachCapError(RuntimeError):
    pass


class UnsolvedBelief(KeyError):
    pass


def belief_keys(beliefs) -> np.ndarray:
    return np.round(np.atleast_2d(np.asarray(beliefs, dtype=float)) * QUANT).astype(np.int64)


@dataclass
class BeliefLayer:
    """Interned beliefs of one agent at one phase of one step."""

    beliefs: np.ndarray
    keys: np.ndarray
    _lookup: dict | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.beliefs)

    def index(self, belief) -> int:
        if self._lookup is None:
            self._lookup = {k.tobytes(): i for i, k in enumerate(self.keys)}
        key = belief_keys(belief)[0].tobytes()
        if key not in self._lookup:
            raise UnsolvedBelief(f"belief {np.asarray(belief).tolist()} was not reached by the solve")
        return self._lookup[key]

    def indices(self, beliefs) -> np.ndarray:
        keys = belief_keys(beliefs)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        if self._lookup is None:
            self._lookup = {k.tobytes(): i for i, k in enumerate(self.keys)}
        found = []
        for k in uniq:
            if k.tobytes() not in self._lookup:
                raise UnsolvedBelief(f"belief {(k / QUANT).tolist()} was not reached by the solve")
            found.append(self._lookup[k.tobytes()])
        return np.asarray(found, dtype=np.int64)[inverse.reshape(-1)]


def intern(candidates: np.ndarray) -> tuple:
    """Deduplicate candidate beliefs; returns (layer, index of each candidate)."""
    keys = belief_keys(candidates)
    uniq, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    return BeliefLayer(candidates[first], uniq), inverse.reshape(-1)


def _comm_masks_used(space: ActionSpace, agent: int, restrict) -> list:
    n = space.n_comm[agent]
    if restrict == "silent":
        return [0]
    if restrict == "always":
        return [n - 1]
    return list(range(n))


def build_agent_layers(scenario: Scenario, space: ActionSpace, agent: int, T: int, erasure: bool,
                       restrict=None, reach_cap: int = DEFAULT_REACH_CAP) -> tuple:
    """Per-step (pre layer, plus layer, operators) for one agent."""
    dyn = scenario.agents[agent]
    n = dyn.num_states
    masks = space.masks[agent]
    tables = space.tables[agent]
    bits = (0, 1) if erasure else (0,)
    used = _comm_masks_used(space, agent, restrict)
    eye = np.eye(n)
    sharing = restrict != "silent"
    post_mats = [post_transition_matrix(dyn.transition, row) for row in tables]

    pre, _ = intern(dyn.initial[None, :].astype(float))
    pres, pluses, ops = [], [], []
    total = 0
    for t in range(1, T + 1):
        # communication phase: silent / erased outcomes, plus delivered deltas
        parts = [eye] if sharing else []
        chunks = []
        for g in used:
            for m in bits:
                post, w = condition_rows(pre.beliefs, masks[g] == m)
                chunks.append(((g, m), post, w))
                parts.append(post[w > 0])
        plus, inv = intern(np.concatenate(parts, axis=0) if parts else np.zeros((0, n)))
        op = AgentOps(pre=pre.beliefs, plus=plus.beliefs, delta=np.zeros(n, dtype=np.int64))
        offset = 0
        if sharing:
            op.delta = inv[:n].copy()
            offset = n
        for key, post, w in chunks:
            rows = np.full(len(post), -1, dtype=np.int64)
            valid = w > 0
            rows[valid] = inv[offset:offset + valid.sum()]
            offset += valid.sum()
            op.eta[key] = one_hot(rows, len(plus), valid)
            op.mass[key] = w
        pres.append(pre)
        pluses.append(plus)
        ops.append(op)
        total += len(pre) + len(plus)
        if total > reach_cap:
            raise ReachCapError(
                f"agent {agent + 1}: {total} interned beliefs by step {t} exceed the cap {reach_cap}; "
                "use the grid solver for this horizon")
        if t == T:
            break
        nxt = np.concatenate([plus.beliefs @ R for R in post_mats], axis=0)
        nxt /= nxt.sum(axis=1, keepdims=True)
        pre, inv = intern(nxt)
        k = len(plus)
        op.beta = [one_hot(inv[i * k:(i + 1) * k], len(pre)) for i in range(len(post_mats))]
    return pres, pluses, ops


@dataclass
class ReachableValueFunction:
    """Value tables per step and constraint state on products of interned layers."""

    pre_layers: list
    plus_layers: list
    values: list
    values_plus: list
    model: ConstraintModel

    mode = "reachable"

    @property
    def horizon(self) -> int:
        return len(self.values)

    def _cs(self, cs):
        if cs is None or not self.model.active:
            return self.model.initial
        return self.model.canon(cs)

    def value(self, t: int, pair, cs=None) -> float:
        i = self.pre_layers[t - 1][0].index(pair[0])
        j = self.pre_layers[t - 1][1].index(pair[1])
        table = self.values[t - 1].get(self._cs(cs))
        if table is None:
            return float("inf")
        return float(table[i, j])

    def value_plus(self, t: int, pair, cs=None) -> float:
        i = self.plus_layers[t - 1][0].index(pair[0])
        j = self.plus_layers[t - 1][1].index(pair[1])
        table = self.values_plus[t - 1].get(self._cs(cs))
        if table is None:
            return float("inf")
        return float(table[i, j])


@dataclass
class ReachablePolicy:
    """Stored minimizers, looked up by step, interned belief and constraint state."""

    scenario: Scenario
    space: ActionSpace
    value_function: ReachableValueFunction
    comm_args: list
    ctrl_args: list

    stationary = False

    @property
    def model(self) -> ConstraintModel:
        return self.value_function.model

    def _cs(self, cs):
        if cs is None or not self.model.active:
            return self.model.initial
        return self.model.canon(cs)

    def comm_index(self, t: int, pair, cs=None) -> int:
        vf = self.value_function
        i = vf.pre_layers[t - 1][0].index(pair[0])
        j = vf.pre_layers[t - 1][1].index(pair[1])
        table = self.comm_args[t - 1].get(self._cs(cs))
        if table is None or table[i, j] < 0:
            raise UnsolvedBelief(f"no feasible communication decision at step {t} in state {cs}")
        return int(table[i, j])

    def ctrl_index(self, t: int, pair_plus, cs_plus=None) -> int:
        vf = self.value_function
        i = vf.plus_layers[t - 1][0].index(pair_plus[0])
        j = vf.plus_layers[t - 1][1].index(pair_plus[1])
        table = self.ctrl_args[t - 1].get(self._cs(cs_plus))
        if table is None:
            raise UnsolvedBelief(f"no control decision stored at step {t} in state {cs_plus}")
        return int(table[i, j])

    def comm_indices(self, b1, b2, cs=None, t: int = 1) -> np.ndarray:
        vf = self.value_function
        i = vf.pre_layers[t - 1][0].indices(b1)
        j = vf.pre_layers[t - 1][1].indices(b2)
        out = self.comm_args[t - 1][self._cs(cs)][i, j]
        if np.any(out < 0):
            raise UnsolvedBelief(f"no feasible communication decision at step {t} in state {cs}")
        return out

    def ctrl_indices(self, b1, b2, cs_plus=None, t: int = 1) -> np.ndarray:
        vf = self.value_function
        i = vf.plus_layers[t - 1][0].indices(b1)
        j = vf.plus_layers[t - 1][1].indices(b2)
        return self.ctrl_args[t - 1][self._cs(cs_plus)][i, j]

    def decide_comm(self, pair, cs=None, t: int = 1) -> PrescriptionPair:
        return self.space.comm_pair(self.comm_index(t, pair, cs))

    def decide_ctrl(self, pair_plus, cs_plus=None, t: int = 1) -> PrescriptionPair:
        return self.space.ctrl_pair(self.ctrl_index(t, pair_plus, cs_plus))


@dataclass
class SolveResult:
    value_function: object
    policy: object
    report: dict

    @property
    def value(self) -> float:
        return self.report["value"]

    def __iter__(self):
        return iter((self.value_function, self.policy))


def solve_finite(scenario: Scenario, *, restrict=None, reach_cap: int = DEFAULT_REACH_CAP,
                 cell_cap: int = DEFAULT_CELL_CAP, horizon: int | None = None,
                 erasure_model: bool | None = None) -> SolveResult:
    """Backward induction for V_1..V_T over reachable beliefs (V_{T+1} = 0).

    ``restrict`` fixes the communication prescriptions: "silent" (never
    share) or "always" (share in every state).  ``erasure_model`` forces the
    erasure-aware backup on or off (default: on when the erasure probability
    is positive).
    """
    start = time.perf_counter()
    if horizon is None:
        if not isinstance(scenario.horizon, Finite):
            raise ValueError("solve_finite needs a finite horizon (or an explicit horizon=T)")
        horizon = scenario.horizon.T
    T = int(horizon)
    if T < 1:
        raise ValueError("horizon must be at least 1")
    erasure = scenario.erasure_prob > 0.0 if erasure_model is None else bool(erasure_model)
    model = ConstraintModel(scenario.constraints, T)
    if model.active and erasure:
        raise NotImplementedError("communication constraints are not supported together with erasures")
    if model.active and model.budget is not None and model.s_max is not None:
        if T // model.s_max > model.budget:
            raise ValueError("constraints are infeasible over the horizon")
    space = ActionSpace(scenario)
    backup = Backup(scenario, space, model, erasure=erasure, restrict=restrict)

    layers = [build_agent_layers(scenario, space, i, T, erasure, restrict, reach_cap) for i in range(2)]
    pres = list(zip(layers[0][0], layers[1][0]))
    pluses = list(zip(layers[0][1], layers[1][1]))
    ops = list(zip(layers[0][2], layers[1][2]))
    for t in range(T):
        for a, b in (pres[t], pluses[t]):
            if len(a) * len(b) > cell_cap:
                raise ReachCapError(f"step {t + 1}: product table of {len(a)} x {len(b)} beliefs exceeds "
                                    f"the cell cap {cell_cap}; use the grid solver")

    if model.active:
        viable = model.viable(T)
        if model.initial not in viable[0]:
            raise ValueError("constraints are infeasible over the horizon")
    else:
        viable = [{model.initial} for _ in range(T)]

    values = [dict() for _ in range(T)]
    values_plus = [dict() for _ in range(T)]
    comm_args = [dict() for _ in range(T)]
    ctrl_args = [dict() for _ in range(T)]
    for t in range(T - 1, -1, -1):
        o1, o2 = ops[t]
        nxt = viable[t + 1] if t + 1 < T else None
        branches = {}
        for cs in sorted(viable[t]):
            if model.active:
                silent_ok, comm_ok = model.branch_ok(cs, nxt)
                post_silent, post_comm = model.after_silence(cs), model.after_comm(cs)
            else:
                silent_ok, comm_ok = True, True
                post_silent = post_comm = cs
            branches[cs] = (silent_ok, comm_ok, post_silent, post_comm)
        needed = set()
        for silent_ok, comm_ok, ps, pc in branches.values():
            if silent_ok:
                needed.add(ps)
            if comm_ok:
                needed.add(pc)
        for cs_plus in sorted(needed):
            if t + 1 < T:
                key = model.advance(cs_plus) if model.active else cs_plus
                v_next = values[t + 1][key]
            else:
                v_next = None
            values_plus[t][cs_plus], ctrl_args[t][cs_plus] = backup.control(o1, o2, v_next)
        for cs, (silent_ok, comm_ok, ps, pc) in branches.items():
            cands = backup.comm_candidates(silent_ok, comm_ok)
            v_s = values_plus[t].get(ps) if silent_ok else None
            v_c = values_plus[t].get(pc) if comm_ok else None
            with np.errstate(invalid="ignore"):
                values[t][cs], comm_args[t][cs] = backup.communication(o1, o2, v_s, v_c, cands)

    vf = ReachableValueFunction(pres, pluses, values, values_plus, model)
    policy = ReachablePolicy(scenario, space, vf, comm_args, ctrl_args)
    v0 = float(values[0][model.initial][0, 0])
    report = {
        "scenario": scenario.digest(),
        "mode": "reachable",
        "horizon": T,
        "restrict": restrict or "none",
        "beliefs_per_agent": [sum(len(a) + len(b) for a, b in zip(layers[i][0], layers[i][1])) for i in range(2)],
        "wall_time": time.perf_counter() - start,
        "value": v0,
    }
    return SolveResult(vf, policy, report)
