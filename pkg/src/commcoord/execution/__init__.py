"""Decentralized execution and exact small-instance oracles."""
from .oracles import (InconsistentHistory, brute_force_T1, brute_force_T2, coordinator_tree_search,
                      exact_joint_filter, factorization_error)
from .simulate import (EpisodeStats, ReplicaDivergence, SimulationResult, run_episode, simulate, tail_horizon,
                       write_trace)

__all__ = [
    "EpisodeStats", "InconsistentHistory", "ReplicaDivergence", "SimulationResult", "brute_force_T1",
    "brute_force_T2", "coordinator_tree_search", "exact_joint_filter", "factorization_error", "run_episode",
    "simulate", "tail_horizon", "write_trace",
]
