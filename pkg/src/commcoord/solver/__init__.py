"""Coordinator dynamic programs and policy extraction."""
from __future__ import annotations

from ..scenario import Finite, Scenario
from .backups import InfeasibleConstraint, comm_backup, control_backup
from .baselines import JointMDPPolicy, baseline_always, baseline_never, joint_mdp_always
from .constraints import ConstraintModel, ConstraintState
from .discounted import (DEFAULT_GRID, DEFAULT_VI_TOL, ConvergenceError, GridPolicy, GridValueFunction,
                         solve_discounted)
from .finite import (ReachCapError, ReachablePolicy, ReachableValueFunction, SolveResult, UnsolvedBelief,
                     solve_finite)
from .grid import SimplexGrid


def solve(scenario: Scenario, grid: int = DEFAULT_GRID, vi_tol: float = DEFAULT_VI_TOL, **kwargs) -> SolveResult:
    """Exact reachable-set solve for finite horizons, grid value iteration otherwise."""
    if isinstance(scenario.horizon, Finite):
        return solve_finite(scenario, **kwargs)
    return solve_discounted(scenario, grid, vi_tol=vi_tol, **kwargs)


def solve_constrained(scenario: Scenario, grid: int = DEFAULT_GRID, vi_tol: float = DEFAULT_VI_TOL,
                      **kwargs) -> SolveResult:
    """Solve on beliefs augmented with the (since-last, count) constraint state."""
    if scenario.constraints is None:
        raise ValueError("scenario has no communication constraints")
    return solve(scenario, grid, vi_tol, **kwargs)


def decide_comm(policy, pair, cstate=None, t: int = 1):
    return policy.decide_comm(pair, cstate, t=t)


def decide_ctrl(policy, pair_plus, cstate=None, t: int = 1):
    return policy.decide_ctrl(pair_plus, cstate, t=t)


__all__ = [
    "ConstraintModel", "ConstraintState", "ConvergenceError", "GridPolicy", "GridValueFunction",
    "InfeasibleConstraint", "JointMDPPolicy", "ReachCapError", "ReachablePolicy", "ReachableValueFunction",
    "SimplexGrid", "SolveResult", "UnsolvedBelief", "baseline_always", "baseline_never", "comm_backup",
    "control_backup", "decide_comm", "decide_ctrl", "joint_mdp_always", "solve", "solve_constrained",
    "solve_discounted", "solve_finite",
]
