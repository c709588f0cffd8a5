"""Brute-force dynamic-programming oracle over fully enumerated MDPs.

The model builders below restate the built-in dynamics from their rules
rather than calling the simulators, so the oracle stays independent of the
code paths it is used to check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument, NoConvergence

MAX_SWEEPS = 1_000_000


@dataclass(frozen=True)
class TabularModel:
    """Explicit finite MDP.

    ``transitions[s, a, s2]`` is P(s2 | s, a); ``rewards[s, a]`` the expected
    immediate reward; ``done[s, a, s2]`` marks transitions that end the
    episode (no bootstrap past them).
    """

    transitions: np.ndarray
    rewards: np.ndarray
    done: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.transitions, dtype=np.float64)
        r = np.asarray(self.rewards, dtype=np.float64)
        d = np.asarray(self.done, dtype=bool)
        if p.ndim != 3 or p.shape[0] != p.shape[2] or r.shape != p.shape[:2] or d.shape != p.shape:
            raise InvalidArgument("inconsistent model table shapes")
        if not np.allclose(p.sum(axis=2), 1.0):
            raise InvalidArgument("transition rows must sum to 1")
        object.__setattr__(self, "transitions", p)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "done", d)

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]


def value_iteration_oracle(model: TabularModel, gamma: float, tol: float = 1e-10,
                           max_sweeps: int = MAX_SWEEPS) -> tuple[np.ndarray, np.ndarray]:
    """Iterate Bellman optimality backups until the max change drops below ``tol``."""
    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgument("gamma must lie in [0, 1]")
    if tol <= 0:
        raise InvalidArgument("tol must be positive")
    cont = model.transitions * (~model.done)
    v = np.zeros(model.num_states)
    for _ in range(max_sweeps):
        q = model.rewards + gamma * cont @ v
        v_new = q.max(axis=1)
        delta = np.max(np.abs(v_new - v))
        v = v_new
        if delta < tol:
            return v, model.rewards + gamma * cont @ v
    raise NoConvergence(f"value iteration did not converge within {max_sweeps} sweeps")


def gridworld_model(grid_size: int = 4, goal: tuple[int, int] | None = None,
                    width: int | None = None) -> TabularModel:
    """4-action grid: moves off the grid stay put, entering the goal pays 1 and ends.

    The goal state itself is absorbing with zero reward, matching a table entry
    a learner never updates.
    """
    width = width or grid_size
    goal = goal if goal is not None else (grid_size - 1, grid_size - 1)
    n = width * width
    deltas = [(-1, 0), (0, 1), (1, 0), (0, -1)]
    p = np.zeros((n, 4, n))
    r = np.zeros((n, 4))
    d = np.zeros((n, 4, n), dtype=bool)
    goal_id = goal[0] * width + goal[1]
    for s in range(n):
        row, col = divmod(s, width)
        inside = row < grid_size and col < grid_size
        for a, (dr, dc) in enumerate(deltas):
            if s == goal_id or not inside:
                p[s, a, s] = 1.0
                d[s, a, s] = True
                continue
            nr, nc = row + dr, col + dc
            if not (0 <= nr < grid_size and 0 <= nc < grid_size):
                nr, nc = row, col
            s2 = nr * width + nc
            p[s, a, s2] = 1.0
            if s2 == goal_id:
                r[s, a] = 1.0
                d[s, a, s2] = True
    return TabularModel(p, r, d)


def bandit_model(probs=(0.2, 0.8)) -> TabularModel:
    """One state, every pull ends the episode with expected reward ``probs[a]``."""
    k = len(probs)
    p = np.ones((1, k, 1))
    return TabularModel(p, np.asarray(probs, dtype=np.float64).reshape(1, k), np.ones((1, k, 1), dtype=bool))
