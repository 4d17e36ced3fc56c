"""Bookkeeping of the communication-constraint state.

``since_last`` counts steps since the most recent communication: it drops
to 0 when a communication happens and grows by one when time advances.  The
step before the horizon counts as a communication, so the first step starts
at 1.  ``count`` is the number of communications used so far.
"""
from __future__ import annotations

from typing import NamedTuple, Optional

from ..scenario import CommConstraints

FREE, SILENT, FORCED, INFEASIBLE = "free", "silent", "forced", "infeasible"


class ConstraintState(NamedTuple):
    since_last: int
    count: int


class ConstraintModel:
    """Constraint-state transitions and the feasible prescription class per state.

    States are canonical: ``since_last`` saturates once it can no longer
    change any decision, and ``count`` is dropped (kept at 0) when the
    budget cannot bind within ``horizon`` steps.
    """

    def __init__(self, constraints: Optional[CommConstraints], horizon: Optional[int] = None):
        self.constraints = constraints
        if constraints is None:
            self.s_min, self.s_max, self.budget = 0, None, None
        else:
            self.s_min, self.s_max = constraints.s_min, constraints.s_max
            self.budget = constraints.max_count
            if self.budget is not None and horizon is not None and self.budget >= horizon:
                self.budget = None
        self.cap = self.s_max if self.s_max is not None else max(self.s_min, 1)

    @property
    def active(self) -> bool:
        return self.s_max is not None or self.budget is not None or self.s_min > 1

    @property
    def initial(self) -> ConstraintState:
        return ConstraintState(min(1, self.cap), 0)

    def canon(self, cs) -> ConstraintState:
        a, b = cs
        return ConstraintState(min(int(a), self.cap), int(b) if self.budget is not None else 0)

    def status(self, cs: ConstraintState) -> str:
        a, b = cs
        exhausted = self.budget is not None and b >= self.budget
        if self.s_max is not None and a >= self.s_max:
            return INFEASIBLE if exhausted else FORCED
        if a < self.s_min or exhausted:
            return SILENT
        return FREE

    def after_silence(self, cs: ConstraintState) -> ConstraintState:
        return ConstraintState(cs.since_last, cs.count)

    def after_comm(self, cs: ConstraintState) -> ConstraintState:
        return ConstraintState(0, cs.count + 1 if self.budget is not None else 0)

    def advance(self, cs_plus: ConstraintState) -> ConstraintState:
        """Post-communication state -> state at the start of the next step."""
        return self.canon((cs_plus.since_last + 1, cs_plus.count))

    def next_if_silent(self, cs: ConstraintState) -> ConstraintState:
        return self.advance(self.after_silence(cs))

    def next_if_comm(self, cs: ConstraintState) -> ConstraintState:
        return self.advance(self.after_comm(cs))

    def all_states(self) -> list:
        counts = range(self.budget + 1) if self.budget is not None else [0]
        return [ConstraintState(a, b) for b in counts for a in range(1, self.cap + 1)]

    def layers(self, T: int) -> list:
        """Reachable pre-communication states for steps 1..T."""
        out = [[self.initial]]
        for _ in range(T - 1):
            nxt = set()
            for cs in out[-1]:
                st = self.status(cs)
                if st == INFEASIBLE:
                    continue
                if st != FORCED:
                    nxt.add(self.next_if_silent(cs))
                if st != SILENT:
                    nxt.add(self.next_if_comm(cs))
            out.append(sorted(nxt))
        return out

    def viable(self, T: int) -> list:
        """Per step, the set of states from which some schedule completes the horizon.

        Returns a list of sets indexed 0..T-1 (step t is entry t-1).
        """
        layers = self.layers(T)
        ok = [set() for _ in range(T)]
        for t in range(T - 1, -1, -1):
            for cs in layers[t]:
                if t == T - 1:
                    if self.status(cs) != INFEASIBLE:
                        ok[t].add(cs)
                    continue
                silent_ok, comm_ok = self.branch_ok(cs, ok[t + 1])
                if silent_ok or comm_ok:
                    ok[t].add(cs)
        return ok

    def branch_ok(self, cs: ConstraintState, next_viable=None) -> tuple:
        """Whether staying silent / communicating from ``cs`` is allowed and stays viable."""
        st = self.status(cs)
        silent_ok = st in (FREE, SILENT)
        comm_ok = st in (FREE, FORCED)
        if next_viable is not None:
            silent_ok = silent_ok and self.next_if_silent(cs) in next_viable
            comm_ok = comm_ok and self.next_if_comm(cs) in next_viable
        return silent_ok, comm_ok
