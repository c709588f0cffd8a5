"""Environment ids understood by configuration documents."""

from __future__ import annotations

from typing import Any, Callable, Mapping

from ..errors import InvalidParams
from .base import EnvCore
from .simulators import (
    BanditAdapter,
    BanditSimulator,
    GridWorldAdapter,
    GridWorldSimulator,
    MatrixGameAdapter,
    MatrixGameSimulator,
)

DEFAULT_MAX_EPISODE_STEPS = 100


def _gridworld(params, max_steps, width=None):
    params = dict(params or {})
    if width is None:
        width = params.get("grid_size", 4)
        if isinstance(width, bool) or not isinstance(width, int) or width < 2:
            raise InvalidParams("gridworld needs an integer grid_size >= 2")
    sim = GridWorldSimulator(width)
    return EnvCore(sim, GridWorldAdapter(width), max_episode_steps=max_steps, params=params)


def _bandit(params, max_steps):
    params = dict(params or {})
    probs = params.get("arm_probabilities", (0.2, 0.8))
    if not isinstance(probs, (list, tuple)) or not probs:
        raise InvalidParams("arm_probabilities must be a non-empty list")
    sim = BanditSimulator(probs)
    return EnvCore(sim, BanditAdapter(sim.num_arms), max_episode_steps=max_steps, params=params)


def _matrix(params, max_steps):
    return EnvCore(MatrixGameSimulator(), MatrixGameAdapter(), max_episode_steps=max_steps, params=params)


ENV_REGISTRY: dict[str, Callable[..., EnvCore]] = {
    "gridworld4": lambda p, m: _gridworld(p, m, width=4),
    "gridworld": _gridworld,
    "bandit": _bandit,
    "matrix_game": _matrix,
}


def make_env(env_id: str, params: Mapping[str, Any] | None = None,
             max_episode_steps: int | None = None) -> EnvCore:
    try:
        factory = ENV_REGISTRY[env_id]
    except KeyError:
        raise InvalidParams(f"unknown environment {env_id!r}; known: {sorted(ENV_REGISTRY)}") from None
    env = factory(params, max_episode_steps or DEFAULT_MAX_EPISODE_STEPS)
    env.env_id = env_id
    return env
