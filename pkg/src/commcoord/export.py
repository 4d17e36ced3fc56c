"""Export of the coordinator problem as a flat POMDP text file.

The coordinator alternates between a communication and a control phase, so
the flat model carries the phase in its state: states are (x1, x2, phase).
The flat format has one global action set, so communication-pair actions
taken in a control state (and vice versa) self-loop with a large penalty.
Costs become negated rewards and the discount applies once per phase.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .prescriptions import ActionSpace
from .scenario import Discounted, DiscountMode, FixedCommCost, Scenario


class UnsupportedFeature(ValueError):
    pass


@dataclass
class FlatPOMDP:
    discount: float
    states: list
    actions: list
    observations: list
    start: np.ndarray
    transition: np.ndarray   # [a, s, s']
    observation: np.ndarray  # [a, s', o]
    reward: np.ndarray       # [a, s]
    penalty: float

    def same_structure(self, other: "FlatPOMDP") -> bool:
        return (self.states == other.states and self.actions == other.actions
                and self.observations == other.observations and self.discount == other.discount
                and all(np.array_equal(getattr(self, f), getattr(other, f))
                        for f in ("start", "transition", "observation", "reward")))


def wrong_phase_penalty(s: Scenario) -> float:
    return 10.0 * s.c_max / (1.0 - s.discount)


def build_flat_pomdp(s: Scenario) -> FlatPOMDP:
    if s.erasure_prob > 0.0:
        raise UnsupportedFeature("erasures cannot be exported (observations would need the decision pair)")
    if not isinstance(s.comm_cost, FixedCommCost):
        raise UnsupportedFeature("only a fixed communication cost can be exported")
    if s.constraints is not None:
        raise UnsupportedFeature("communication constraints cannot be exported")
    if not isinstance(s.horizon, Discounted) or s.discount_mode is not DiscountMode.PER_PHASE:
        raise UnsupportedFeature("export needs a discounted scenario with per-phase discounting")
    space = ActionSpace(s)
    n1, n2 = s.shape
    a1, a2 = s.agents
    joint = [(x1, x2) for x1 in range(n1) for x2 in range(n2)]
    nx = len(joint)
    states = [f"x{x1}_{x2}_{ph}" for ph in ("comm", "ctrl") for x1, x2 in joint]
    n_comm = space.n_comm[0] * space.n_comm[1]
    n_ctrl = space.n_ctrl[0] * space.n_ctrl[1]
    actions = ([f"g{space.comm_pair(k).first.mask}_{space.comm_pair(k).second.mask}" for k in range(n_comm)]
               + [f"l{k // space.n_ctrl[1]}_{k % space.n_ctrl[1]}" for k in range(n_ctrl)])
    observations = ["phi"] + [f"z{x1}_{x2}" for x1, x2 in joint] + ["tick"]
    tick = len(observations) - 1
    S, A, O = len(states), len(actions), len(observations)
    penalty = wrong_phase_penalty(s)
    T = np.zeros((A, S, S))
    Z = np.zeros((A, S, O))
    R = np.zeros((A, S))
    rho = s.comm_cost.rho
    for k in range(n_comm):
        g = space.comm_pair(k)
        for j, (x1, x2) in enumerate(joint):
            sent = max(g.first(x1), g.second(x2))
            T[k, j, nx + j] = 1.0
            Z[k, nx + j, 1 + j if sent else 0] = 1.0
            R[k, j] = -rho * sent
            # wrong phase
            T[k, nx + j, nx + j] = 1.0
            R[k, nx + j] = -penalty
        Z[k, :nx, tick] = 1.0
    for l in range(n_ctrl):
        a = n_comm + l
        lam = space.ctrl_pair(l)
        for j, (x1, x2) in enumerate(joint):
            u1, u2 = lam.first(x1), lam.second(x2)
            for jj, (y1, y2) in enumerate(joint):
                T[a, nx + j, jj] = a1.transition[x1, u1, y1] * a2.transition[x2, u2, y2]
            R[a, nx + j] = -s.cost[x1, x2, u1, u2]
            T[a, j, j] = 1.0
            R[a, j] = -penalty
        Z[a, :, tick] = 1.0
    start = np.zeros(S)
    start[:nx] = np.outer(a1.initial, a2.initial).reshape(-1)
    return FlatPOMDP(s.discount, states, actions, observations, start, T, Z, R, penalty)


def _num(v: float) -> str:
    return repr(float(v))


def write_pomdp(model: FlatPOMDP, header: str = "") -> str:
    lines = [f"# {line}" if line else "#" for line in header.splitlines()]
    lines += [
        "# Coordinator problem with an alternating communication/control phase in the state.",
        f"# Actions used in the wrong phase self-loop with reward -{_num(model.penalty)}.",
        f"discount: {_num(model.discount)}",
        "values: reward",
        "states: " + " ".join(model.states),
        "actions: " + " ".join(model.actions),
        "observations: " + " ".join(model.observations),
        "start: " + " ".join(_num(p) for p in model.start),
        "",
    ]
    A, S, O = model.observation.shape
    for a in range(A):
        for s in range(S):
            for s2 in np.nonzero(model.transition[a, s])[0]:
                lines.append(f"T: {model.actions[a]} : {model.states[s]} : {model.states[s2]} "
                             f"{_num(model.transition[a, s, s2])}")
    for a in range(A):
        for s2 in range(S):
            for o in np.nonzero(model.observation[a, s2])[0]:
                lines.append(f"O: {model.actions[a]} : {model.states[s2]} : {model.observations[o]} "
                             f"{_num(model.observation[a, s2, o])}")
    for a in range(A):
        for s in range(S):
            if model.reward[a, s] != 0.0:
                lines.append(f"R: {model.actions[a]} : {model.states[s]} : * : * {_num(model.reward[a, s])}")
    return "\n".join(lines) + "\n"


def export_pomdp(s: Scenario, header: str = "") -> str:
    return write_pomdp(build_flat_pomdp(s), header)


_ENTRY = re.compile(r"^([TOR]):\s*(.+)$")


def parse_pomdp(text: str) -> FlatPOMDP:
    """Parse the subset of the flat format written by :func:`write_pomdp`."""
    fields = {}
    entries = []
    penalty = float("nan")
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("#"):
            m = re.search(r"reward -(\S+)\.$", line)
            if m:
                penalty = float(m.group(1))
            continue
        if not line:
            continue
        m = _ENTRY.match(line)
        if m:
            entries.append((m.group(1), [p.strip() for p in m.group(2).split(":")]))
            continue
        key, _, value = line.partition(":")
        fields[key.strip()] = value.split()
    states, actions, obs = fields["states"], fields["actions"], fields["observations"]
    si = {n: i for i, n in enumerate(states)}
    ai = {n: i for i, n in enumerate(actions)}
    oi = {n: i for i, n in enumerate(obs)}
    A, S, O = len(actions), len(states), len(obs)
    T, Z, R = np.zeros((A, S, S)), np.zeros((A, S, O)), np.zeros((A, S))
    for kind, parts in entries:
        if kind == "T":
            a, s, rest = parts
            s2, p = rest.split()
            T[ai[a], si[s], si[s2]] = float(p)
        elif kind == "O":
            a, s2, rest = parts
            o, p = rest.split()
            Z[ai[a], si[s2], oi[o]] = float(p)
        else:
            a, s, _, rest = parts
            _, r = rest.split()
            R[ai[a], si[s]] = float(r)
    if fields.get("values", ["reward"])[0] != "reward":
        raise ValueError("only reward-valued files are supported")
    start = np.array([float(v) for v in fields["start"]])
    return FlatPOMDP(float(fields["discount"][0]), states, actions, obs, start, T, Z, R, penalty)
