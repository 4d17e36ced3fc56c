"""Problem data model for two-agent control with costly state sharing.

A :class:`Scenario` bundles both agents' local Markov dynamics, the joint
stage cost, the communication cost model, discounting, the packet-erasure
probability, optional communication constraints and the horizon.  Scenarios
are immutable and validated on construction.
"""
from __future__ import annotations

import dataclasses
import enum
import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple, Optional, Sequence, Union

import numpy as np

STOCHASTIC_TOL = 1e-9


class ScenarioError(ValueError):
    """Invalid scenario data.  ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class DiscountMode(str, enum.Enum):
    PER_PHASE = "per-phase"
    PER_STEP = "per-step"


@dataclass(frozen=True)
class Finite:
    T: int

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 1:
            raise ScenarioError(f"finite horizon must be a positive integer, got {self.T!r}", "horizon.finite")


@dataclass(frozen=True)
class Discounted:
    pass


Horizon = Union[Finite, Discounted]


def _frozen_array(values, path: str, ndim: int) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"not a numeric array ({exc})", path) from None
    if arr.ndim != ndim:
        raise ScenarioError(f"expected a {ndim}-d array, got shape {arr.shape}", path)
    if not np.all(np.isfinite(arr)):
        raise ScenarioError("non-finite entry", path)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AgentDynamics:
    """Local controlled Markov chain of one agent.

    ``transition[x, u, x']`` is P(x' | x, u); ``initial`` is the law of the
    first local state.
    """

    transition: np.ndarray
    initial: np.ndarray
    state_labels: Optional[tuple] = None
    action_labels: Optional[tuple] = None
    path: str = field(default="agent", repr=False, compare=False)

    def __post_init__(self):
        P = _frozen_array(self.transition, f"{self.path}.transition", 3)
        p0 = _frozen_array(self.initial, f"{self.path}.initial", 1)
        n, m, n2 = P.shape
        if n < 1 or m < 1:
            raise ScenarioError("need at least one state and one action", f"{self.path}.transition")
        if n2 != n:
            raise ScenarioError(f"transition must be [x][u][x'] with matching state counts, got {P.shape}",
                                f"{self.path}.transition")
        if p0.shape != (n,):
            raise ScenarioError(f"initial has length {p0.size}, expected {n}", f"{self.path}.initial")
        for x, u in itertools.product(range(n), range(m)):
            row = P[x, u]
            where = f"{self.path}.transition[{x}][{u}]"
            if np.any(row < 0):
                raise ScenarioError("negative probability", where)
            if abs(row.sum() - 1.0) > STOCHASTIC_TOL:
                raise ScenarioError(f"non-stochastic row (sums to {row.sum():.12g})", where)
        if np.any(p0 < 0) or abs(p0.sum() - 1.0) > STOCHASTIC_TOL:
            raise ScenarioError(f"initial distribution must be nonnegative and sum to 1 (sums to {p0.sum():.12g})",
                                f"{self.path}.initial")
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "initial", p0)
        for name, size in (("state_labels", n), ("action_labels", m)):
            labels = getattr(self, name)
            if labels is not None:
                labels = tuple(str(s) for s in labels)
                if len(labels) != size:
                    raise ScenarioError(f"expected {size} labels, got {len(labels)}", f"{self.path}.{name}")
                object.__setattr__(self, name, labels)

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    def action_label(self, u: int) -> str:
        return self.action_labels[u] if self.action_labels else str(u)


@dataclass(frozen=True)
class FixedCommCost:
    rho: float

    def __post_init__(self):
        if not math.isfinite(self.rho) or self.rho < 0:
            raise ScenarioError(f"communication cost must be finite and nonnegative, got {self.rho!r}",
                                "comm_cost.fixed")
        object.__setattr__(self, "rho", float(self.rho))

    def table(self, n1: int, n2: int) -> np.ndarray:
        return np.full((n1, n2), self.rho)


@dataclass(frozen=True, eq=False)
class TableCommCost:
    """State-dependent cost rho[x1, x2] charged whenever sharing happens."""

    rho: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.rho, "comm_cost.table", 2)
        if np.any(arr < 0):
            raise ScenarioError("communication cost entries must be nonnegative", "comm_cost.table")
        object.__setattr__(self, "rho", arr)

    def table(self, n1: int, n2: int) -> np.ndarray:
        if self.rho.shape != (n1, n2):
            raise ScenarioError(f"table shape {self.rho.shape} does not match state counts ({n1}, {n2})",
                                "comm_cost.table")
        return self.rho


CommCost = Union[FixedCommCost, TableCommCost]


@dataclass(frozen=True)
class CommConstraints:
    """Communication constraints.

    ``s_min``/``s_max`` bound the number of steps between successive
    communications and ``max_count`` caps the total; ``None`` is unbounded.
    The step before the horizon starts counts as a communication, so the
    first step sees one step elapsed.
    """

    s_min: int = 0
    s_max: Optional[int] = None
    max_count: Optional[int] = None

    def __post_init__(self):
        if int(self.s_min) != self.s_min or self.s_min < 0:
            raise ScenarioError("s_min must be a nonnegative integer", "constraints.s_min")
        if self.s_max is not None:
            if int(self.s_max) != self.s_max or self.s_max < max(self.s_min, 1):
                raise ScenarioError(f"s_max must be an integer >= max(s_min, 1), got {self.s_max!r}",
                                    "constraints.s_max")
        if self.max_count is not None and (int(self.max_count) != self.max_count or self.max_count < 0):
            raise ScenarioError("max_count must be a nonnegative integer", "constraints.max_count")

    def min_forced_count(self, T: int) -> int:
        """Fewest communications any feasible schedule needs over ``T`` steps."""
        if self.s_max is None:
            return 0
        return T // self.s_max


class Observation(NamedTuple):
    """Outcome of a communication phase: shared joint state (or None for phi)
    together with the publicly seen decision pair m."""

    z: Optional[tuple]
    m: tuple

    @property
    def is_phi(self) -> bool:
        return self.z is None

    def check(self, erasure: bool = False) -> None:
        attempted = tuple(self.m) != (0, 0)
        if self.z is not None and not attempted:
            raise ValueError("shared state without a communication attempt")
        if not erasure and self.z is None and attempted:
            raise ValueError("communication attempt must deliver the state when there is no erasure")


PHI_SILENT = Observation(None, (0, 0))


@dataclass(frozen=True, eq=False)
class Scenario:
    agents: tuple
    cost: np.ndarray
    comm_cost: CommCost = FixedCommCost(0.0)
    discount: float = 1.0
    erasure_prob: float = 0.0
    constraints: Optional[CommConstraints] = None
    horizon: Horizon = Discounted()
    discount_mode: DiscountMode = DiscountMode.PER_PHASE

    def __post_init__(self):
        agents = tuple(self.agents)
        if len(agents) != 2:
            raise ScenarioError(f"exactly two agents required, got {len(agents)}", "agents")
        object.__setattr__(self, "agents", agents)
        a1, a2 = agents
        c = _frozen_array(self.cost, "cost", 4)
        expect = (a1.num_states, a2.num_states, a1.num_actions, a2.num_actions)
        if c.shape != expect:
            raise ScenarioError(f"cost shape {c.shape} does not match (|X1|,|X2|,|U1|,|U2|) = {expect}", "cost")
        object.__setattr__(self, "cost", c)
        self.comm_cost.table(a1.num_states, a2.num_states)
        if not (0.0 < self.discount <= 1.0):
            raise ScenarioError(f"discount must lie in (0, 1], got {self.discount!r}", "discount")
        if not (0.0 <= self.erasure_prob <= 1.0):
            raise ScenarioError(f"erasure probability must lie in [0, 1], got {self.erasure_prob!r}",
                                "erasure_prob")
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "erasure_prob", float(self.erasure_prob))
        object.__setattr__(self, "discount_mode", DiscountMode(self.discount_mode))
        if isinstance(self.horizon, Discounted) and self.discount >= 1.0:
            raise ScenarioError("discounted horizon requires discount < 1", "discount")
        k = self.constraints
        if k is not None:
            if isinstance(self.horizon, Discounted) and k.max_count is not None:
                raise ScenarioError("a communication budget needs a finite horizon", "constraints.max_count")
            if isinstance(self.horizon, Finite) and k.max_count is not None:
                need = k.min_forced_count(self.horizon.T)
                if need > k.max_count:
                    raise ScenarioError(
                        f"infeasible: s_max={k.s_max} forces {need} communications over T={self.horizon.T} "
                        f"but max_count={k.max_count}", "constraints")

    # -- derived quantities -------------------------------------------------
    @property
    def shape(self) -> tuple:
        return tuple(a.num_states for a in self.agents)

    def rho_table(self) -> np.ndarray:
        return self.comm_cost.table(*self.shape)

    @property
    def c_max(self) -> float:
        return float(max(np.abs(self.cost).max(), np.abs(self.rho_table()).max()))

    def phase_discounts(self) -> tuple:
        """(factor after the communication phase, factor after the control phase)."""
        if self.discount_mode is DiscountMode.PER_PHASE:
            return self.discount, self.discount
        return 1.0, self.discount

    def step_weights(self, t: int) -> tuple:
        """Weights of the communication cost and the control cost at step t (1-based)."""
        dc, du = self.phase_discounts()
        base = (dc * du) ** (t - 1)
        return base, base * dc

    def initial_pair(self) -> tuple:
        return tuple(a.initial for a in self.agents)

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def with_rho(self, rho: float) -> "Scenario":
        return self.replace(comm_cost=FixedCommCost(rho))

    def to_dict(self) -> dict:
        return scenario_to_dict(self)

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


# -- benchmark instances ---------------------------------------------------

DEFENSE_STATES = ("safe", "attack")
DEFENSE_ACTIONS = ("ℵ", "d")


def defense_dynamics(p_attack: float, p_recover: float, path: str = "agent") -> AgentDynamics:
    for name, p in (("p_attack", p_attack), ("p_recover", p_recover)):
        if not 0.0 <= p <= 1.0:
            raise ScenarioError(f"{name} must lie in [0, 1], got {p!r}", path)
    P = np.zeros((2, 2, 2))
    P[0, :, :] = [1.0 - p_attack, p_attack]
    P[1, 0, :] = [0.0, 1.0]
    P[1, 1, :] = [p_recover, 1.0 - p_recover]
    return AgentDynamics(P, [1.0, 0.0], DEFENSE_STATES, DEFENSE_ACTIONS, path=path)


def defense_cost(attack_cost: float = 20.0, clash_cost: float = 150.0) -> np.ndarray:
    c = np.zeros((2, 2, 2, 2))
    for x1, x2, u1, u2 in itertools.product(range(2), repeat=4):
        c[x1, x2, u1, u2] = (attack_cost if (x1 or x2) else 0.0) + (clash_cost if (u1 and u2) else 0.0)
    return c


def defense_scenario(pa1: float, pv1: float, pa2: float, pv2: float, theta: float, rho: float = 0.0,
                     horizon: Horizon = Discounted(), **kwargs) -> Scenario:
    """Two entities under attack, each with a defender choosing nothing or defend.

    Both entities start safe.  Defending simultaneously costs an extra 150.
    """
    agents = (defense_dynamics(pa1, pv1, "agents[0]"), defense_dynamics(pa2, pv2, "agents[1]"))
    return Scenario(agents, defense_cost(), FixedCommCost(rho), theta, horizon=horizon, **kwargs)


def table3_scenario(rho: float = 0.0, **kwargs) -> Scenario:
    return defense_scenario(0.3, 0.6, 0.3, 0.6, 0.95, rho, **kwargs)


def table4_scenario(rho: float = 0.0, **kwargs) -> Scenario:
    return defense_scenario(0.5, 0.95, 0.1, 0.6, 0.99, rho, **kwargs)


def random_scenario(rng: np.random.Generator, n_states: Sequence[int] = (2, 2), n_actions: Sequence[int] = (2, 2),
                    cost_scale: float = 10.0, rho_max: float = 5.0, **kwargs) -> Scenario:
    """Random instance with Dirichlet rows, uniform costs and uniform rho."""
    agents = []
    for i, (n, m) in enumerate(zip(n_states, n_actions)):
        P = rng.dirichlet(np.ones(n), size=(n, m))
        p0 = rng.dirichlet(np.ones(n))
        agents.append(AgentDynamics(P, p0, path=f"agents[{i}]"))
    cost = rng.uniform(0.0, cost_scale, size=(*n_states, *n_actions))
    kwargs.setdefault("comm_cost", FixedCommCost(float(rng.uniform(0.0, rho_max))))
    kwargs.setdefault("discount", 1.0 if isinstance(kwargs.get("horizon"), Finite) else 0.9)
    return Scenario(tuple(agents), cost, **kwargs)


# -- serialization ---------------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    agents = []
    for a in s.agents:
        d: dict[str, Any] = {
            "num_states": a.num_states,
            "num_actions": a.num_actions,
            "transition": a.transition.tolist(),
            "initial": a.initial.tolist(),
        }
        if a.state_labels is not None:
            d["state_labels"] = list(a.state_labels)
        if a.action_labels is not None:
            d["action_labels"] = list(a.action_labels)
        agents.append(d)
    if isinstance(s.comm_cost, FixedCommCost):
        comm = {"fixed": s.comm_cost.rho}
    else:
        comm = {"table": s.comm_cost.rho.tolist()}
    out: dict[str, Any] = {
        "agents": agents,
        "cost": s.cost.tolist(),
        "comm_cost": comm,
        "discount": s.discount,
        "discount_mode": s.discount_mode.value,
        "erasure_prob": s.erasure_prob,
        "constraints": None,
        "horizon": {"finite": s.horizon.T} if isinstance(s.horizon, Finite) else {"discounted": True},
    }
    if s.constraints is not None:
        k = s.constraints
        out["constraints"] = {"s_min": k.s_min, "s_max": k.s_max, "max_count": k.max_count}
    return out


def _require(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise ScenarioError("expected an object", path)
    if key not in d:
        raise ScenarioError("missing field", f"{path}.{key}" if path else key)
    return d[key]


def _check_dims(name: str, value, declared, path: str):
    if int(value) != declared:
        raise ScenarioError(f"declared {name}={declared} but arrays imply {value}", path)


def scenario_from_dict(doc: dict) -> Scenario:
    raw_agents = _require(doc, "agents", "")
    if not isinstance(raw_agents, list) or len(raw_agents) != 2:
        raise ScenarioError("expected a list of exactly two agents", "agents")
    agents = []
    for i, ra in enumerate(raw_agents):
        path = f"agents[{i}]"
        dyn = AgentDynamics(_require(ra, "transition", path), _require(ra, "initial", path),
                            ra.get("state_labels"), ra.get("action_labels"), path=path)
        _check_dims("num_states", dyn.num_states, _require(ra, "num_states", path), f"{path}.num_states")
        _check_dims("num_actions", dyn.num_actions, _require(ra, "num_actions", path), f"{path}.num_actions")
        agents.append(dyn)

    raw_comm = doc.get("comm_cost", {"fixed": 0.0})
    if not isinstance(raw_comm, dict) or len(raw_comm) != 1 or not ({"fixed", "table"} & set(raw_comm)):
        raise ScenarioError("expected exactly one of {fixed, table}", "comm_cost")
    if "fixed" in raw_comm:
        try:
            comm: CommCost = FixedCommCost(float(raw_comm["fixed"]))
        except (TypeError, ValueError):
            raise ScenarioError("not a number", "comm_cost.fixed") from None
    else:
        comm = TableCommCost(raw_comm["table"])

    raw_h = doc.get("horizon", {"discounted": True})
    if isinstance(raw_h, dict) and "finite" in raw_h:
        horizon: Horizon = Finite(raw_h["finite"])
    elif isinstance(raw_h, dict) and "discounted" in raw_h:
        horizon = Discounted()
    else:
        raise ScenarioError("expected {finite: T} or {discounted: true}", "horizon")

    raw_k = doc.get("constraints")
    constraints = None
    if raw_k is not None:
        if not isinstance(raw_k, dict):
            raise ScenarioError("expected an object", "constraints")
        unknown = set(raw_k) - {"s_min", "s_max", "max_count"}
        if unknown:
            raise ScenarioError(f"unknown fields {sorted(unknown)}", "constraints")
        constraints = CommConstraints(raw_k.get("s_min", 0), raw_k.get("s_max"), raw_k.get("max_count"))

    try:
        mode = DiscountMode(doc.get("discount_mode", DiscountMode.PER_PHASE.value))
    except ValueError:
        raise ScenarioError("expected 'per-phase' or 'per-step'", "discount_mode") from None
    return Scenario(
        tuple(agents),
        _require(doc, "cost", ""),
        comm,
        discount=_number(doc.get("discount", 1.0), "discount"),
        erasure_prob=_number(doc.get("erasure_prob", 0.0), "erasure_prob"),
        constraints=constraints,
        horizon=horizon,
        discount_mode=mode,
    )


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"expected a number, got {value!r}", path)
    return float(value)


def dumps_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, ensure_ascii=False)


def loads_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed document: {exc}") from None
    return scenario_from_dict(doc)


def load_scenario(source: Union[str, Path]) -> Scenario:
    """Read a scenario file (JSON)."""
    return loads_scenario(Path(source).read_text(encoding="utf-8"))


def dump_scenario(s: Scenario, dest: Union[str, Path]) -> None:
    Path(dest).write_text(dumps_scenario(s) + "\n", encoding="utf-8")
