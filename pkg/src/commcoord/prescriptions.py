"""Coordinator action spaces.

A communication prescription maps an agent's local state to a send/silent
bit and is stored as an integer bitmask (bit x = decision in state x).  A
control prescription maps each local state to an action index.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .scenario import Scenario

DEFAULT_ENUMERATION_CAP = 2 ** 20


class EnumerationCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class CommPrescription:
    mask: int
    width: int

    def __post_init__(self):
        if not 0 <= self.mask < (1 << self.width):
            raise ValueError(f"mask {self.mask} does not fit width {self.width}")

    def __call__(self, x: int) -> int:
        return (self.mask >> x) & 1

    def bits(self) -> np.ndarray:
        return mask_bits(self.mask, self.width)

    @classmethod
    def silent(cls, width: int) -> "CommPrescription":
        return cls(0, width)

    @classmethod
    def always(cls, width: int) -> "CommPrescription":
        return cls((1 << width) - 1, width)

    def render(self, agent: int = 1) -> str:
        return f"γ{_sup(agent)}=[{','.join(str(b) for b in self.bits())}]"


@dataclass(frozen=True)
class CtrlPrescription:
    actions: tuple

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))

    def __call__(self, x: int) -> int:
        return self.actions[x]

    @property
    def width(self) -> int:
        return len(self.actions)

    def render(self, agent: int = 1, labels=None) -> str:
        names = [labels[a] if labels else str(a) for a in self.actions]
        return f"λ{_sup(agent)}=[{','.join(names)}]"


class PrescriptionPair(NamedTuple):
    first: object
    second: object

    def render(self, scenario: Scenario | None = None) -> str:
        if isinstance(self.first, CtrlPrescription):
            labels = [a.action_labels for a in scenario.agents] if scenario else [None, None]
            return f"{self.first.render(1, labels[0])} {self.second.render(2, labels[1])}"
        return f"{self.first.render(1)} {self.second.render(2)}"


def _sup(i: int) -> str:
    return {1: "¹", 2: "²"}.get(i, str(i))


def mask_bits(mask: int, width: int) -> np.ndarray:
    return (mask >> np.arange(width)) & 1


def evaluate(prescription, x: int) -> int:
    return prescription(x)


def _check_cap(count: int, cap: int, what: str):
    if count > cap:
        raise EnumerationCapError(f"{what}: {count} prescription pairs exceed the enumeration cap {cap}")


def comm_masks(num_states: int) -> np.ndarray:
    """All masks of one agent as a (2^n, n) 0/1 array, in mask order."""
    return np.array([mask_bits(k, num_states) for k in range(1 << num_states)], dtype=np.int8)


def ctrl_tables(num_states: int, num_actions: int) -> np.ndarray:
    """All control prescriptions of one agent as a (|U|^n, n) array, lexicographic."""
    return np.array(list(itertools.product(range(num_actions), repeat=num_states)), dtype=np.int64)


def count_comm_pairs(scenario: Scenario) -> int:
    n1, n2 = scenario.shape
    return (1 << n1) * (1 << n2)


def count_ctrl_pairs(scenario: Scenario) -> int:
    a1, a2 = scenario.agents
    return a1.num_actions ** a1.num_states * a2.num_actions ** a2.num_states


def enumerate_comm_pairs(scenario: Scenario, cap: int = DEFAULT_ENUMERATION_CAP) -> list:
    _check_cap(count_comm_pairs(scenario), cap, "communication")
    n1, n2 = scenario.shape
    return [PrescriptionPair(CommPrescription(g1, n1), CommPrescription(g2, n2))
            for g1 in range(1 << n1) for g2 in range(1 << n2)]


def enumerate_ctrl_pairs(scenario: Scenario, cap: int = DEFAULT_ENUMERATION_CAP) -> list:
    _check_cap(count_ctrl_pairs(scenario), cap, "control")
    a1, a2 = scenario.agents
    t1 = ctrl_tables(a1.num_states, a1.num_actions)
    t2 = ctrl_tables(a2.num_states, a2.num_actions)
    return [PrescriptionPair(CtrlPrescription(r1), CtrlPrescription(r2)) for r1 in t1 for r2 in t2]


class ActionSpace:
    """Dense per-agent encodings of both prescription spaces.

    Pair index k of the communication space is ``g1 * n_masks2 + g2`` and
    likewise for control, which reproduces the lexicographic order used by
    :func:`enumerate_comm_pairs` and :func:`enumerate_ctrl_pairs`.
    """

    def __init__(self, scenario: Scenario, cap: int = DEFAULT_ENUMERATION_CAP):
        _check_cap(count_comm_pairs(scenario), cap, "communication")
        _check_cap(count_ctrl_pairs(scenario), cap, "control")
        a1, a2 = scenario.agents
        self.scenario = scenario
        self.masks = (comm_masks(a1.num_states), comm_masks(a2.num_states))
        self.tables = (ctrl_tables(a1.num_states, a1.num_actions), ctrl_tables(a2.num_states, a2.num_actions))

    @property
    def n_comm(self) -> tuple:
        return len(self.masks[0]), len(self.masks[1])

    @property
    def n_ctrl(self) -> tuple:
        return len(self.tables[0]), len(self.tables[1])

    def comm_pair(self, k: int) -> PrescriptionPair:
        g1, g2 = divmod(int(k), self.n_comm[1])
        n1, n2 = self.scenario.shape
        return PrescriptionPair(CommPrescription(g1, n1), CommPrescription(g2, n2))

    def ctrl_pair(self, k: int) -> PrescriptionPair:
        l1, l2 = divmod(int(k), self.n_ctrl[1])
        return PrescriptionPair(CtrlPrescription(self.tables[0][l1]), CtrlPrescription(self.tables[1][l2]))

    def comm_index(self, pair: PrescriptionPair) -> int:
        return pair.first.mask * self.n_comm[1] + pair.second.mask

    def ctrl_index(self, pair: PrescriptionPair) -> int:
        n1, n2 = self.n_ctrl
        l1 = _table_index(pair.first.actions, self.scenario.agents[0].num_actions)
        l2 = _table_index(pair.second.actions, self.scenario.agents[1].num_actions)
        return l1 * n2 + l2

    def always_index(self) -> int:
        return self.n_comm[0] * self.n_comm[1] - 1


def _table_index(actions, num_actions: int) -> int:
    k = 0
    for a in actions:
        k = k * num_actions + int(a)
    return k
