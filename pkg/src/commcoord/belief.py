"""Coordinator belief filters on each agent's local state.

``eta`` conditions a belief on what the communication phase revealed and
``beta`` pushes it through the agent's dynamics under a control
prescription.  The joint belief is always the product of the two per-agent
beliefs, so every function here works agent by agent.
"""
from __future__ import annotations

import numpy as np

from .prescriptions import CommPrescription, CtrlPrescription, mask_bits
from .scenario import AgentDynamics, Observation

NORMALIZE_TOL = 1e-9
DRIFT_TOL = 1e-6


class ZeroNormalizer(ArithmeticError):
    """Conditioning event has probability zero under the belief."""


class IllegalOutcome(ValueError):
    pass


def as_belief(weights) -> np.ndarray:
    b = np.asarray(weights, dtype=float)
    if b.ndim != 1 or np.any(b < 0) or abs(b.sum() - 1.0) > NORMALIZE_TOL:
        raise ValueError(f"not a probability vector: {weights!r}")
    return b


def delta(n: int, x: int) -> np.ndarray:
    d = np.zeros(n)
    d[x] = 1.0
    return d


def _bits(gamma, width: int) -> np.ndarray:
    if isinstance(gamma, CommPrescription):
        if gamma.width != width:
            raise ValueError(f"prescription width {gamma.width} != belief size {width}")
        return gamma.bits()
    if isinstance(gamma, (int, np.integer)):
        return mask_bits(int(gamma), width)
    return np.asarray(gamma, dtype=int)


def _actions(lam) -> np.ndarray:
    if isinstance(lam, CtrlPrescription):
        return np.asarray(lam.actions)
    return np.asarray(lam, dtype=int)


def _renormalize(b: np.ndarray) -> np.ndarray:
    s = b.sum()
    if abs(s - 1.0) > DRIFT_TOL:
        raise ArithmeticError(f"belief drifted to total mass {s!r}")
    return b / s


def _condition(pi: np.ndarray, keep: np.ndarray) -> np.ndarray:
    w = np.where(keep, pi, 0.0)
    s = w.sum()
    if s <= 0.0:
        raise ZeroNormalizer("conditioning on an event of zero probability")
    return w / s


def silent_mass(pi, gamma) -> float:
    """Probability that the agent stays silent: sum of pi over {gamma(x) = 0}."""
    pi = np.asarray(pi, dtype=float)
    return float(pi[_bits(gamma, pi.size) == 0].sum())


def prob_no_comm(pair, gamma) -> float:
    p1, p2 = pair
    g1, g2 = gamma
    return silent_mass(p1, g1) * silent_mass(p2, g2)


def prob_comm_outcome(pair, gamma, x) -> float:
    p1, p2 = (np.asarray(p, dtype=float) for p in pair)
    b1, b2 = _bits(gamma[0], p1.size), _bits(gamma[1], p2.size)
    x1, x2 = x
    return float(max(b1[x1], b2[x2]) * p1[x1] * p2[x2])


def eta(pi, gamma, z, agent: int = 0) -> np.ndarray:
    """Post-communication belief of one agent.

    ``z`` is an :class:`Observation`, ``None`` (phi) or a joint state tuple.
    """
    pi = np.asarray(pi, dtype=float)
    if isinstance(z, Observation):
        z = z.z
    if z is not None:
        return delta(pi.size, z[agent])
    return _condition(pi, _bits(gamma, pi.size) == 0)


def beta(pi_plus, lam, dyn: AgentDynamics) -> np.ndarray:
    """Belief after applying control prescription ``lam`` and one transition."""
    pi_plus = np.asarray(pi_plus, dtype=float)
    u = _actions(lam)
    rows = dyn.transition[np.arange(pi_plus.size), u]
    return _renormalize(pi_plus @ rows)


def eta_erasure(pi, gamma, z, m, p_e: float, agent: int = 0) -> np.ndarray:
    """Post-communication belief when attempts may be erased.

    A delivered state collapses the belief; a silent round conditions on
    gamma(x) = 0; an erased attempt still reveals each agent's decision bit
    and conditions on gamma(x) = m[agent].
    """
    pi = np.asarray(pi, dtype=float)
    if isinstance(z, Observation):
        z, m = z.z, z.m
    m = tuple(int(v) for v in m)
    if z is not None:
        if m == (0, 0):
            raise IllegalOutcome("a state cannot be delivered without a communication attempt")
        return delta(pi.size, z[agent])
    if m == (0, 0):
        return _condition(pi, _bits(gamma, pi.size) == 0)
    if p_e <= 0.0:
        raise IllegalOutcome("an attempt cannot be erased when the erasure probability is zero")
    return _condition(pi, _bits(gamma, pi.size) == m[agent])


def erasure_outcome_probs(pair, gamma, p_e: float) -> dict:
    """Distribution of (z, m) outcomes of one communication phase.

    Keys are :class:`Observation` values; zero-probability outcomes are
    omitted.
    """
    p1, p2 = (np.asarray(p, dtype=float) for p in pair)
    b1, b2 = _bits(gamma[0], p1.size), _bits(gamma[1], p2.size)
    out: dict = {}
    for x1 in range(p1.size):
        for x2 in range(p2.size):
            w = p1[x1] * p2[x2]
            if w == 0.0:
                continue
            m = (int(b1[x1]), int(b2[x2]))
            if m == (0, 0):
                key = Observation(None, m)
                out[key] = out.get(key, 0.0) + w
                continue
            if p_e < 1.0:
                key = Observation((x1, x2), m)
                out[key] = out.get(key, 0.0) + (1.0 - p_e) * w
            if p_e > 0.0:
                key = Observation(None, m)
                out[key] = out.get(key, 0.0) + p_e * w
    return out


def base_outcome_probs(pair, gamma) -> dict:
    """Outcome distribution without erasures (same keys as :func:`erasure_outcome_probs`)."""
    return erasure_outcome_probs(pair, gamma, 0.0)


def run_filter(scenario, prescriptions, observations) -> tuple:
    """Apply eta / beta alternately along a history, agent by agent.

    ``prescriptions`` alternates communication and control pairs and
    ``observations`` holds one outcome per communication phase.
    """
    pair = [np.asarray(a.initial, dtype=float) for a in scenario.agents]
    p_e = scenario.erasure_prob
    for k, pres in enumerate(prescriptions):
        if k % 2 == 0:
            z = observations[k // 2]
            pair = [eta_erasure(pair[i], pres[i], z, z.m, p_e, agent=i) for i in range(2)]
        else:
            pair = [beta(pair[i], pres[i], scenario.agents[i]) for i in range(2)]
    return tuple(pair)
