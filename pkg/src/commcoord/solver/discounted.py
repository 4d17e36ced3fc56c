"""Discounted infinite-horizon solve by value iteration on a belief grid.

Each agent's simplex carries a regular lattice; values live on the product
of the two lattices and off-node beliefs are interpolated (linear per agent
for two states, Freudenthal barycentric otherwise, tensor product across
agents).  The grid is closed under the communication update for delivered
states (vertices), and for two-state agents also under silent conditioning.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..prescriptions import ActionSpace, PrescriptionPair
from ..scenario import Discounted, Scenario
from .constraints import ConstraintModel
from .engine import AgentOps, Backup, condition_rows, post_transition_matrix
from .finite import SolveResult, _comm_masks_used
from .grid import SimplexGrid

DEFAULT_GRID = 201
DEFAULT_VI_TOL = 1e-6
DEFAULT_MAX_ITER = 100_000


class ConvergenceError(RuntimeError):
    pass


def grid_agent_ops(scenario: Scenario, space: ActionSpace, agent: int, grid: SimplexGrid,
                   erasure: bool, restrict=None) -> AgentOps:
    dyn = scenario.agents[agent]
    nodes = grid.nodes
    delta = np.array([grid.vertex(x) for x in range(dyn.num_states)], dtype=np.int64)
    op = AgentOps(pre=nodes, plus=nodes, delta=delta)
    masks = space.masks[agent]
    for g in _comm_masks_used(space, agent, restrict):
        for m in ((0, 1) if erasure else (0,)):
            post, w = condition_rows(nodes, masks[g] == m)
            op.eta[(g, m)] = grid.interpolation_matrix(post, w > 0)
            op.mass[(g, m)] = w
    for row in space.tables[agent]:
        nxt = nodes @ post_transition_matrix(dyn.transition, row)
        nxt /= nxt.sum(axis=1, keepdims=True)
        op.beta.append(grid.interpolation_matrix(nxt))
    return op


@dataclass
class GridValueFunction:
    """Stationary V and V+ tables on the product grid, per constraint state."""

    grids: tuple
    values: dict
    values_plus: dict
    model: ConstraintModel

    mode = "grid"

    def _cs(self, cs):
        if cs is None or not self.model.active:
            return self.model.initial
        return self.model.canon(cs)

    def _interp(self, table, pair) -> float:
        W1 = self.grids[0].interpolation_matrix(np.asarray(pair[0], dtype=float)[None, :])
        W2 = self.grids[1].interpolation_matrix(np.asarray(pair[1], dtype=float)[None, :])
        return float((W1 @ (W2 @ table.T).T)[0, 0])

    def value(self, pair, cs=None) -> float:
        return self._interp(self.values[self._cs(cs)], pair)

    def value_plus(self, pair, cs=None) -> float:
        return self._interp(self.values_plus[self._cs(cs)], pair)

    def table(self, cs=None) -> np.ndarray:
        return self.values[self._cs(cs)]


@dataclass
class GridPolicy:
    """Stationary minimizers on grid nodes; off-node beliefs use the nearest node."""

    scenario: Scenario
    space: ActionSpace
    value_function: GridValueFunction
    comm_args: dict
    ctrl_args: dict

    stationary = True

    @property
    def model(self) -> ConstraintModel:
        return self.value_function.model

    @property
    def grids(self) -> tuple:
        return self.value_function.grids

    def comm_indices(self, b1, b2, cs=None, t: int = 1) -> np.ndarray:
        """Vectorized lookup for arrays of beliefs (rows)."""
        i = self.grids[0].nearest(b1)
        j = self.grids[1].nearest(b2)
        return self.comm_args[self.value_function._cs(cs)][i, j]

    def ctrl_indices(self, b1, b2, cs_plus=None, t: int = 1) -> np.ndarray:
        i = self.grids[0].nearest(b1)
        j = self.grids[1].nearest(b2)
        return self.ctrl_args[self.value_function._cs(cs_plus)][i, j]

    def comm_index(self, t, pair, cs=None) -> int:
        return int(self.comm_indices(pair[0], pair[1], cs)[0])

    def ctrl_index(self, t, pair_plus, cs_plus=None) -> int:
        return int(self.ctrl_indices(pair_plus[0], pair_plus[1], cs_plus)[0])

    def decide_comm(self, pair, cs=None, t: int = 1) -> PrescriptionPair:
        return self.space.comm_pair(self.comm_index(t, pair, cs))

    def decide_ctrl(self, pair_plus, cs_plus=None, t: int = 1) -> PrescriptionPair:
        return self.space.ctrl_pair(self.ctrl_index(t, pair_plus, cs_plus))


def _branches(model: ConstraintModel) -> dict:
    if not model.active:
        cs = model.initial
        return {cs: (True, True, cs, cs)}
    out = {}
    for cs in model.all_states():
        silent_ok, comm_ok = model.branch_ok(cs)
        out[cs] = (silent_ok, comm_ok, model.after_silence(cs), model.after_comm(cs))
    return out


@dataclass
class _Sweep:
    backup: Backup
    ops: tuple
    model: ConstraintModel
    branches: dict = field(default_factory=dict)

    def __call__(self, values: dict) -> tuple:
        o1, o2 = self.ops
        needed = sorted({ps for s_ok, _, ps, _ in self.branches.values() if s_ok}
                        | {pc for _, c_ok, _, pc in self.branches.values() if c_ok})
        vp, ap = {}, {}
        for cs_plus in needed:
            key = self.model.advance(cs_plus) if self.model.active else cs_plus
            vp[cs_plus], ap[cs_plus] = self.backup.control(o1, o2, values[key])
        new, an = {}, {}
        for cs, (s_ok, c_ok, ps, pc) in self.branches.items():
            cands = self.backup.comm_candidates(s_ok, c_ok)
            new[cs], an[cs] = self.backup.communication(o1, o2, vp.get(ps) if s_ok else None,
                                                        vp.get(pc) if c_ok else None, cands)
        return new, an, vp, ap


def solve_discounted(scenario: Scenario, grid: int = DEFAULT_GRID, *, vi_tol: float = DEFAULT_VI_TOL,
                     max_iter: int = DEFAULT_MAX_ITER, min_sweeps: int = 0, restrict=None,
                     erasure_model: bool | None = None, initial_values=None) -> SolveResult:
    """Value iteration V <- comm_backup(control_backup(V)) from V = 0 until the
    sup-norm change drops below ``vi_tol * (1 - discount per step) * max(c_max, 1)``.

    ``min_sweeps`` forces at least that many sweeps, which lets several solves
    be compared iterate by iterate.
    """
    start = time.perf_counter()
    if not isinstance(scenario.horizon, Discounted):
        raise ValueError("solve_discounted needs a discounted scenario")
    if grid < 2:
        raise ValueError("grid needs at least 2 nodes per axis")
    erasure = scenario.erasure_prob > 0.0 if erasure_model is None else bool(erasure_model)
    model = ConstraintModel(scenario.constraints, None)
    if model.budget is not None:
        raise ValueError("a communication budget needs a finite horizon")
    if model.active and erasure:
        raise NotImplementedError("communication constraints are not supported together with erasures")
    space = ActionSpace(scenario)
    backup = Backup(scenario, space, model, erasure=erasure, restrict=restrict)
    grids = tuple(SimplexGrid(a.num_states, grid - 1) for a in scenario.agents)
    ops = tuple(grid_agent_ops(scenario, space, i, grids[i], erasure, restrict) for i in range(2))
    sweep = _Sweep(backup, ops, model, _branches(model))

    dc, du = scenario.phase_discounts()
    eps = vi_tol * (1.0 - dc * du) * max(scenario.c_max, 1.0)
    shape = (grids[0].size, grids[1].size)
    if initial_values is None:
        values = {cs: np.zeros(shape) for cs in sweep.branches}
    else:
        values = {cs: np.array(v, dtype=float) for cs, v in initial_values.items()}
    history = []
    residual = np.inf
    it = 0
    while it < max_iter:
        new, comm_args, vp, ctrl_args = sweep(values)
        it += 1
        residual = max(float(np.max(np.abs(new[cs] - values[cs]))) for cs in new)
        history.append(residual)
        values = new
        if residual < eps and it >= min_sweeps:
            break
    else:
        raise ConvergenceError(f"value iteration did not converge in {max_iter} sweeps (residual {residual:.3g})")

    vf = GridValueFunction(grids, values, vp, model)
    policy = GridPolicy(scenario, space, vf, comm_args, ctrl_args)
    v0 = vf.value(scenario.initial_pair())
    report = {
        "scenario": scenario.digest(),
        "mode": "grid",
        "grid": grid,
        "restrict": restrict or "none",
        "iterations": it,
        "residual": residual,
        "tolerance": eps,
        "residual_history": history,
        "wall_time": time.perf_counter() - start,
        "value": v0,
    }
    return SolveResult(vf, policy, report)
