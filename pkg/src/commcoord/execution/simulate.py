"""Decentralized Monte Carlo execution of coordinator policies.

Each episode is driven by its own random stream derived from the root seed
and the episode number, so results do not depend on how episodes are
batched.  Episodes are advanced together in vectorized chunks; within a
chunk every agent keeps its own replica of the common belief pair, and the
two replicas are compared after every update.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..prescriptions import ActionSpace
from ..scenario import Finite, Scenario
from ..solver.constraints import ConstraintModel

DEFAULT_TAIL_TOL = 0.05
CHUNK = 10_000
TRACE_FIELDS = ("episode", "t", "phase", "x1", "x2", "m1", "m2", "z", "u1", "u2", "stage_cost", "weight")


class ReplicaDivergence(AssertionError):
    pass


def tail_horizon(scenario: Scenario, tail_tol: float = DEFAULT_TAIL_TOL) -> tuple:
    """Smallest H whose discounted tail bound is below ``tail_tol``; returns (H, bound).

    After H steps the remaining cost is at most q^H (max c + dc max rho) / (1 - q)
    with q the discount per full step.
    """
    if isinstance(scenario.horizon, Finite):
        return scenario.horizon.T, 0.0
    dc, du = scenario.phase_discounts()
    q = dc * du
    per_step = float(np.abs(scenario.cost).max() + dc * np.abs(scenario.rho_table()).max())
    if per_step == 0.0:
        return 1, 0.0
    H = max(1, math.ceil(math.log(tail_tol * (1.0 - q) / per_step) / math.log(q)))
    return H, q ** H * per_step / (1.0 - q)


def episode_uniforms(seed: int, episode: int, H: int) -> np.ndarray:
    """(H + 1, 3) uniforms for one episode: row 0 draws the initial states,
    row t the erasure coin (column 2) and the next states (columns 0, 1) of step t."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(episode)])))
    return rng.random((H + 1, 3))


def _sample(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    return (u[:, None] >= cdf).sum(axis=1)


@dataclass
class EpisodeStats:
    cost: float
    comms: int
    trace: list = field(default_factory=list)

    def recompute(self) -> float:
        total = 0.0
        for rec in self.trace:
            total += rec["weight"] * rec["stage_cost"]
        return total


@dataclass
class SimulationResult:
    mean: float
    std_error: float
    comm_frequency: float
    episodes: int
    horizon: int
    tail_bound: float
    seed: int
    costs: np.ndarray = field(repr=False)
    comms: np.ndarray = field(repr=False)

    def summary(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "comm_frequency": self.comm_frequency,
                "episodes": self.episodes, "horizon": self.horizon, "tail_bound": self.tail_bound,
                "seed": self.seed}


class _Replica:
    """One agent's copy of the common belief pair for a batch of episodes."""

    def __init__(self, scenario: Scenario, n: int):
        self.b = [np.tile(a.initial, (n, 1)).astype(float) for a in scenario.agents]

    def communicate(self, masks, g, m, delivered, x):
        for i in range(2):
            keep = masks[i][g[i]] == m[i][:, None]
            w = (self.b[i] * keep).sum(axis=1)
            post = np.divide(self.b[i] * keep, w[:, None], out=np.zeros_like(self.b[i]), where=w[:, None] > 0)
            if np.any((w <= 0) & ~delivered):
                raise ArithmeticError("conditioning on a zero-probability outcome")
            eye = np.eye(self.b[i].shape[1])
            self.b[i] = np.where(delivered[:, None], eye[x[i]], post)

    def propagate(self, transitions, tables, l):
        for i in range(2):
            n = self.b[i].shape[1]
            R = transitions[i][np.arange(n)[None, :], tables[i][l[i]]]
            nxt = np.einsum("ki,kij->kj", self.b[i], R)
            self.b[i] = nxt / nxt.sum(axis=1, keepdims=True)


def _grouped(fn, b1, b2, cs, t, model):
    if cs is None:
        return fn(b1, b2, None, t=t)
    out = np.empty(len(b1), dtype=np.int64)
    keys = np.stack(cs, axis=1)
    for key in np.unique(keys, axis=0):
        rows = np.all(keys == key, axis=1)
        out[rows] = fn(b1[rows], b2[rows], tuple(int(v) for v in key), t=t)
    return out


def _run_chunk(policy, scenario: Scenario, space: ActionSpace, model: ConstraintModel, episodes, seed: int,
               H: int, trace: bool):
    n = len(episodes)
    U = np.stack([episode_uniforms(seed, e, H) for e in episodes], axis=0)
    a1, a2 = scenario.agents
    transitions = (a1.transition, a2.transition)
    tables = space.tables
    masks = space.masks
    rho = scenario.rho_table()
    p_e = scenario.erasure_prob
    x = [_sample(np.tile(a.initial, (n, 1)), U[:, 0, i]) for i, a in enumerate(scenario.agents)]
    reps = (_Replica(scenario, n), _Replica(scenario, n))
    constrained = model.active
    cs = None
    if constrained:
        init = model.initial
        cs = [np.full(n, init.since_last), np.full(n, init.count)]
    total = np.zeros(n)
    comms = np.zeros(n, dtype=np.int64)
    records = [[] for _ in range(n)] if trace else None
    n_g2, n_l2 = space.n_comm[1], space.n_ctrl[1]

    for t in range(1, H + 1):
        w_comm, w_ctrl = scenario.step_weights(t)
        # communication phase: both replicas must pick the same prescriptions
        ks = [_grouped(policy.comm_indices, r.b[0], r.b[1], cs, t, model) for r in reps]
        if not np.array_equal(ks[0], ks[1]):
            raise ReplicaDivergence("agents disagree on the communication prescription")
        g = np.divmod(ks[0], n_g2)
        m = [masks[i][g[i], x[i]].astype(np.int64) for i in range(2)]
        attempted = (m[0] | m[1]) == 1
        erased = attempted & (U[:, t, 2] < p_e)
        delivered = attempted & ~erased
        comm_cost = np.where(attempted, rho[x[0], x[1]], 0.0)
        total += w_comm * comm_cost
        comms += attempted
        for r in reps:
            r.communicate(masks, g, m, delivered, x)
        _check(reps)
        if constrained:
            a, b = cs
            cs = [np.where(attempted, 0, a), np.where(attempted, b + 1, b) if model.budget is not None else b]
        # control phase
        ls = [_grouped(policy.ctrl_indices, r.b[0], r.b[1], cs, t, model) for r in reps]
        if not np.array_equal(ls[0], ls[1]):
            raise ReplicaDivergence("agents disagree on the control prescription")
        lam = np.divmod(ls[0], n_l2)
        u = [tables[i][lam[i], x[i]] for i in range(2)]
        stage = scenario.cost[x[0], x[1], u[0], u[1]]
        total += w_ctrl * stage
        if trace:
            for e in range(n):
                z = f"{x[0][e]}{x[1][e]}" if delivered[e] else "phi"
                records[e].append(dict(episode=int(episodes[e]), t=t, phase="comm", x1=int(x[0][e]),
                                       x2=int(x[1][e]), m1=int(m[0][e]), m2=int(m[1][e]), z=z, u1="", u2="",
                                       stage_cost=float(comm_cost[e]), weight=w_comm))
                records[e].append(dict(episode=int(episodes[e]), t=t, phase="ctrl", x1=int(x[0][e]),
                                       x2=int(x[1][e]), m1="", m2="", z="", u1=int(u[0][e]), u2=int(u[1][e]),
                                       stage_cost=float(stage[e]), weight=w_ctrl))
        if t == H:
            break
        for r in reps:
            r.propagate(transitions, tables, lam)
        _check(reps)
        x = [_sample(transitions[i][x[i], u[i]], U[:, t, i]) for i in range(2)]
        if constrained:
            a, b = cs
            cs = [np.minimum(a + 1, model.cap), b]
    return total, comms, records


def _check(reps):
    for i in range(2):
        if not np.array_equal(reps[0].b[i], reps[1].b[i]):
            raise ReplicaDivergence("belief replicas of the two agents differ")


def simulate(policy, scenario: Scenario, episodes: int, *, seed: int = 0, horizon: int | None = None,
             tail_tol: float = DEFAULT_TAIL_TOL, chunk: int = CHUNK, trace_path=None,
             trace_episodes: int = 0) -> SimulationResult:
    """Mean discounted cost of ``policy`` over independent episodes.

    ``horizon`` defaults to the finite horizon, or to the tail-bound length
    for discounted scenarios.  Per-phase trace records of the first
    ``trace_episodes`` episodes go to ``trace_path`` (CSV) when given.
    """
    if episodes < 1:
        raise ValueError("need at least one episode")
    if horizon is None:
        H, bound = tail_horizon(scenario, tail_tol)
    else:
        H = int(horizon)
        bound = _tail_at(scenario, H)
    space = ActionSpace(scenario)
    T = scenario.horizon.T if isinstance(scenario.horizon, Finite) else None
    model = ConstraintModel(scenario.constraints, T)
    costs = np.empty(episodes)
    comms = np.empty(episodes, dtype=np.int64)
    traced = []
    for lo in range(0, episodes, chunk):
        ids = np.arange(lo, min(episodes, lo + chunk))
        want = bool(trace_path) and lo < trace_episodes
        c, k, rec = _run_chunk(policy, scenario, space, model, ids, seed, H, want)
        costs[ids], comms[ids] = c, k
        if want:
            traced.extend(r for e, recs in zip(ids, rec) if e < trace_episodes for r in recs)
    if trace_path:
        write_trace(trace_path, traced)
    std = float(costs.std(ddof=1) / math.sqrt(episodes)) if episodes > 1 else 0.0
    return SimulationResult(float(costs.mean()), std, float(comms.sum() / (episodes * H)), episodes, H, bound,
                            int(seed), costs, comms)


def _tail_at(scenario: Scenario, H: int) -> float:
    if isinstance(scenario.horizon, Finite) and H >= scenario.horizon.T:
        return 0.0
    dc, du = scenario.phase_discounts()
    q = dc * du
    if q >= 1.0:
        return math.inf
    per_step = float(np.abs(scenario.cost).max() + dc * np.abs(scenario.rho_table()).max())
    return q ** H * per_step / (1.0 - q)


def run_episode(policy, scenario: Scenario, episode: int, *, seed: int = 0, horizon: int | None = None,
                tail_tol: float = DEFAULT_TAIL_TOL) -> EpisodeStats:
    """A single traced episode (same random stream as in :func:`simulate`)."""
    H = tail_horizon(scenario, tail_tol)[0] if horizon is None else int(horizon)
    space = ActionSpace(scenario)
    T = scenario.horizon.T if isinstance(scenario.horizon, Finite) else None
    model = ConstraintModel(scenario.constraints, T)
    c, k, rec = _run_chunk(policy, scenario, space, model, np.array([episode]), seed, H, True)
    return EpisodeStats(float(c[0]), int(k[0]), rec[0])


def write_trace(path, records) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRACE_FIELDS)
        writer.writeheader()
        writer.writerows(records)
