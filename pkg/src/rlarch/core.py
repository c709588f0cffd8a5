"""Domain types and small pure helpers used across the package.

Observations, actions and states are integer ids over finite ``Discrete``
spaces. All types here are immutable once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .errors import InvalidArgument


@dataclass(frozen=True)
class Space:
    size: int
    kind: str = "Discrete"

    def __post_init__(self):
        if self.kind != "Discrete":
            raise InvalidArgument(f"unsupported space kind {self.kind!r}")
        if int(self.size) != self.size or self.size < 1:
            raise InvalidArgument(f"space size must be a positive integer, got {self.size!r}")

    def contains(self, value) -> bool:
        return space_contains(self, value)


def Discrete(size: int) -> Space:
    return Space(size)


def space_contains(space: Space, value) -> bool:
    """True iff ``value`` is an integer id in ``[0, space.size)``."""
    if isinstance(value, bool):
        return False
    try:
        iv = int(value)
    except (TypeError, ValueError):
        return False
    if iv != value:
        return False
    return 0 <= iv < space.size


class Transition(NamedTuple):
    """One agent-environment interaction step."""

    obs: int
    action: int
    reward: float
    next_obs: int
    terminated: bool
    truncated: bool
    agent_id: Optional[str] = None

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


@dataclass(frozen=True)
class Trajectory:
    transitions: tuple
    episode_id: int = 0

    def __post_init__(self):
        ts = tuple(self.transitions)
        object.__setattr__(self, "transitions", ts)
        for i, (prev, nxt) in enumerate(zip(ts, ts[1:])):
            if prev.next_obs != nxt.obs:
                raise InvalidArgument(f"trajectory breaks chaining at step {i}")
            if prev.done:
                raise InvalidArgument(f"transition {i} ends the episode but is not last")

    def __len__(self) -> int:
        return len(self.transitions)

    def __iter__(self):
        return iter(self.transitions)

    @property
    def rewards(self) -> list[float]:
        return [t.reward for t in self.transitions]


@dataclass(frozen=True)
class Hyperparameters:
    gamma: float = 0.99
    alpha: float = 0.1
    alpha_critic: float = 0.1
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 5000

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidArgument("gamma must lie in [0, 1]")
        # alpha = 0 is accepted: a frozen learner is a legitimate tuning candidate.
        if not self.alpha >= 0.0:
            raise InvalidArgument("alpha must be non-negative")
        if not self.alpha_critic > 0.0:
            raise InvalidArgument("alpha_critic must be positive")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise InvalidArgument("epsilon_start: need 0 <= epsilon_end <= epsilon_start <= 1")
        if int(self.epsilon_decay_steps) != self.epsilon_decay_steps or self.epsilon_decay_steps < 1:
            raise InvalidArgument("epsilon_decay_steps must be an integer >= 1")

    def epsilon_at(self, global_step: int) -> float:
        """Linear decay from epsilon_start to epsilon_end, constant afterwards."""
        frac = min(max(global_step, 0) / self.epsilon_decay_steps, 1.0)
        return self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)


@dataclass(frozen=True)
class RunProgress:
    global_step: int = 0
    episode_count: int = 0
    fraction_complete: float = 0.0


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Sum of ``gamma**k * rewards[k]``; 0.0 for an empty sequence."""
    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgument(f"gamma must lie in [0, 1], got {gamma}")
    total = 0.0
    weight = 1.0
    for r in rewards:
        total += weight * r
        weight *= gamma
    return total


def returns_to_go(rewards: Sequence[float], gamma: float) -> list[float]:
    """``G_t`` for every t, computed backwards in one pass."""
    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgument(f"gamma must lie in [0, 1], got {gamma}")
    out = [0.0] * len(rewards)
    g = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        g = rewards[i] + gamma * g
        out[i] = g
    return out
