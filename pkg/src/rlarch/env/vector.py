"""Vectorized stepping over independent EnvCore instances.

Autoreset: when an instance's episode ends, ``step`` returns the terminal
observation in ``obs`` and resets the instance straight away; the fresh
initial observation travels in ``reset_obs`` and is the observation the next
action must be chosen from. A transition built from a result therefore always
pairs the pre-step observation with the true terminal observation.
"""

from __future__ import annotations

from typing import Any, Callable, Mapping, Sequence

from ..errors import InvalidArgument
from .base import EnvCore, StepResult


class VecEnv:
    def __init__(self, envs: Sequence[EnvCore],
                 reset_params: Callable[[int], Mapping[str, Any] | None] | None = None):
        if not envs:
            raise InvalidArgument("VecEnv needs at least one instance")
        self.envs = list(envs)
        # Called with the instance index whenever an instance is reset.
        self.reset_params = reset_params

    def __len__(self) -> int:
        return len(self.envs)

    def _params_for(self, i: int):
        return self.reset_params(i) if self.reset_params is not None else None

    def reset(self, seeds: Sequence[int | None] | None = None) -> list[tuple]:
        if seeds is not None and len(seeds) != len(self.envs):
            raise InvalidArgument(f"got {len(seeds)} seeds for {len(self.envs)} instances")
        return [
            env.reset(seed=None if seeds is None else seeds[i], params=self._params_for(i))
            for i, env in enumerate(self.envs)
        ]

    def step_one(self, i: int, action) -> StepResult:
        env = self.envs[i]
        result = env.step(action)
        if result.done:
            result = result._replace(reset_obs=env.reset(params=self._params_for(i)))
        return result

    def step(self, actions: Sequence) -> list[StepResult]:
        if len(actions) != len(self.envs):
            raise InvalidArgument(f"got {len(actions)} actions for {len(self.envs)} instances")
        return [self.step_one(i, a) for i, a in enumerate(actions)]

    def render_info(self):
        return [env.render_info() for env in self.envs]


def vec_step(venv: VecEnv, actions: Sequence) -> list[StepResult]:
    return venv.step(actions)
