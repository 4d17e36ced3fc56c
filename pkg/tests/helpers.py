from __future__ import annotations

import numpy as np

from commcoord.scenario import AgentDynamics, Finite, defense_scenario, random_scenario


def with_initial(s, b1, b2):
    agents = tuple(AgentDynamics(a.transition, np.asarray(b, dtype=float), a.state_labels, a.action_labels)
                   for a, b in zip(s.agents, (b1, b2)))
    return s.replace(agents=agents)


def defense_finite(T: int, rho: float = 1.0, **kw):
    return defense_scenario(0.3, 0.6, 0.3, 0.6, 1.0, rho, horizon=Finite(T), **kw)


def random_finite(seed: int, T: int, **kw):
    rng = np.random.default_rng(seed)
    kw.setdefault("n_states", tuple(int(v) for v in rng.integers(1, 4, size=2)))
    kw.setdefault("n_actions", tuple(int(v) for v in rng.integers(1, 3, size=2)))
    return random_scenario(rng, horizon=Finite(T), **kw)
