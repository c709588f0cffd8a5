"""The two lifecycle strategies and the environment handle they share.

Both strategies traverse the same per-step event order:

1. for each agent in canonical order, draw its action from the instance's
   action stream (``handle.rng``);
2. step the environment (which consumes the simulator's own stream);
3. split the joint step into per-agent transitions and hand them over.

``mediated``: the lifecycle loop asks the actor for actions and forwards them.
``delegated``: the actor receives the handle and a budget and drives it.
"""

from __future__ import annotations

from typing import Mapping

from ..core import Transition
from ..errors import InvalidArgument
from .coordination import assemble_joint_action, split_experience

MEDIATED = "mediated"
DELEGATED = "delegated"


class EnvSlot:
    """One env instance plus its action stream and current observation."""

    __slots__ = ("index", "env", "rng", "obs")

    def __init__(self, index: int, env, rng, obs=None):
        self.index = index
        self.env = env
        self.rng = rng
        self.obs = obs


class EnvHandle:
    """What an actor may touch: observations, its action stream, ``step``.

    Every step is recorded into ``sink`` as a tuple of per-agent transitions.
    """

    def __init__(self, slot: EnvSlot, step_fn, sink: list):
        self._slot = slot
        self._step_fn = step_fn  # joint action -> StepResult (with autoreset)
        self._sink = sink
        self.agent_ids = slot.env.agent_ids

    @property
    def obs(self) -> tuple:
        return self._slot.obs

    @property
    def rng(self):
        return self._slot.rng

    def step(self, actions: Mapping[str, int]):
        joint = assemble_joint_action(actions, None, self.agent_ids)
        prev = self._slot.obs
        result = self._step_fn(joint)
        per_agent = split_experience(result, joint, prev, None, self.agent_ids)
        self._sink.append(tuple(per_agent[ag] for ag in self.agent_ids))
        self._slot.obs = result.reset_obs if result.done else result.obs
        return result


def mediated_loop(actor, handle: EnvHandle, steps: int = 0, episodes: int = 0) -> int:
    taken = ended = 0
    agent_ids = handle.agent_ids
    while (steps and taken < steps) or (episodes and ended < episodes):
        obs = handle.obs
        actions = {}
        for i, ag in enumerate(agent_ids):
            actions[ag] = actor.act(ag, obs[i], handle.rng)
        result = handle.step(actions)
        taken += 1
        if result.done:
            ended += 1
    return taken


def run_strategy(strategy: str, actor, handle: EnvHandle, steps: int = 0, episodes: int = 0) -> int:
    if strategy == MEDIATED:
        return mediated_loop(actor, handle, steps, episodes)
    if strategy == DELEGATED:
        return actor.interact(handle, steps=steps, episodes=episodes)
    raise InvalidArgument(f"unknown lifecycle strategy {strategy!r}")


def flatten(segments) -> list[Transition]:
    """Merged transition stream: segments in order, steps in order, agents in order."""
    return [t for seg in segments for step in seg for t in step]
