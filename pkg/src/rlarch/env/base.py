"""Environment Core and the pieces it is assembled from.

A step runs a fixed pipeline::

    ActionManager.process        validate and normalise the joint action
    SimulatorAdapter.advance     translate to controls, advance the simulator
    ObservationManager.collect   trace -> per-agent observations
    RewardManager.compute        trace (+ action) -> per-agent rewards

The simulator knows nothing about observations, rewards or agents. The
adapter is the only place that understands both sides.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple, Optional, Protocol

from ..core import Space, space_contains
from ..errors import (
    EpisodeFinished,
    InvalidAction,
    InvalidParams,
    NotInitialized,
    SimulatorError,
)


@dataclass(frozen=True)
class SimTrace:
    """Raw output of one simulator advance: a payload plus event flags."""

    payload: Mapping[str, Any]
    events: frozenset = frozenset()


@dataclass(frozen=True)
class RenderInfo:
    """Simulator-independent scene description consumed by the Renderer.

    Positions are (row, col). Non-spatial scenes have ``rows == cols == 0``
    and carry their content in ``tags``.
    """

    scene: str
    rows: int = 0
    cols: int = 0
    agents: tuple = ()
    goals: tuple = ()
    tags: Mapping[str, Any] = field(default_factory=dict)

    @property
    def spatial(self) -> bool:
        return self.rows > 0 and self.cols > 0

    @property
    def agent(self):
        return self.agents[0] if self.agents else None

    @property
    def goal(self):
        return self.goals[0] if self.goals else None


class StepResult(NamedTuple):
    obs: tuple
    reward: tuple
    terminated: bool
    truncated: bool
    # Set by vectorized stepping when the instance was reset after this step:
    # the fresh initial observation, to be used for the next action.
    reset_obs: Optional[tuple] = None

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class StepFragments(NamedTuple):
    obs: tuple
    reward: tuple
    terminated: bool
    trace: SimTrace


@dataclass(frozen=True)
class ParamSpec:
    kind: str  # "int" | "float" | "prob_list"
    low: float | None = None
    high: float | None = None

    def check(self, name: str, value):
        if self.kind == "prob_list":
            if not isinstance(value, (list, tuple)) or not value:
                raise InvalidParams(f"{name} must be a non-empty list of probabilities")
            out = []
            for v in value:
                if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
                    raise InvalidParams(f"{name} entries must be numbers in [0, 1]")
                out.append(float(v))
            return tuple(out)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidParams(f"{name} must be a number, got {value!r}")
        if self.kind == "int":
            if int(value) != value:
                raise InvalidParams(f"{name} must be an integer, got {value!r}")
            value = int(value)
        else:
            value = float(value)
        if self.low is not None and value < self.low:
            raise InvalidParams(f"{name}={value} below minimum {self.low}")
        if self.high is not None and value > self.high:
            raise InvalidParams(f"{name}={value} above maximum {self.high}")
        return value


class Simulator(Protocol):
    name: str
    param_schema: Mapping[str, ParamSpec]

    def resolve_params(self, params: Mapping[str, Any] | None) -> dict: ...
    def sim_reset(self, seed: int | None, params: Mapping[str, Any], prev=None): ...
    def sim_advance(self, state, control) -> tuple[Any, SimTrace]: ...
    def sim_snapshot(self, state) -> bytes: ...
    def sim_restore(self, data: bytes): ...
    def render_info(self, state) -> RenderInfo: ...


class SimulatorAdapter(Protocol):
    agent_ids: tuple
    observation_space: Space
    action_space: Space
    micro_steps: int

    def to_control(self, actions: tuple): ...
    def observe(self, trace: SimTrace) -> tuple: ...
    def reward(self, trace: SimTrace, actions: tuple) -> tuple: ...
    def terminated(self, trace: SimTrace) -> bool: ...
    def initial_observation(self, state) -> tuple: ...


def sim_step_via_adapter(adapter: SimulatorAdapter, sim: Simulator, state, actions) -> tuple[Any, StepFragments]:
    """Advance ``sim`` by one agent action, returning state and extracted fragments.

    One action maps to ``adapter.micro_steps`` simulator advances with the same
    control; the trace of the last advance is the one translated.
    """
    if not isinstance(actions, tuple):
        actions = (actions,)
    control = adapter.to_control(actions)
    trace = None
    try:
        for _ in range(adapter.micro_steps):
            state, trace = sim.sim_advance(state, control)
    except SimulatorError:
        raise
    except Exception as exc:  # noqa: BLE001 - any simulator fault is wrapped
        raise SimulatorError(f"{sim.name}: advance failed for control {control!r}: {exc}") from exc
    fragments = StepFragments(
        obs=adapter.observe(trace),
        reward=adapter.reward(trace, actions),
        terminated=adapter.terminated(trace),
        trace=trace,
    )
    return state, fragments


class ActionManager:
    """Validates a joint action against the action space."""

    def __init__(self, action_space: Space, num_agents: int):
        self.action_space = action_space
        self.num_agents = num_agents

    def process(self, action) -> tuple:
        if isinstance(action, (list, tuple)):
            actions = tuple(action)
        else:
            actions = (action,)
        if len(actions) != self.num_agents:
            raise InvalidAction(f"expected {self.num_agents} action(s), got {len(actions)}")
        for a in actions:
            if not space_contains(self.action_space, a):
                raise InvalidAction(f"action {a!r} outside Discrete({self.action_space.size})")
        return tuple(int(a) for a in actions)


class ObservationManager:
    def __init__(self, adapter: SimulatorAdapter):
        self.adapter = adapter

    def collect(self, fragments: StepFragments) -> tuple:
        return fragments.obs


class RewardManager:
    """Computes per-agent rewards. Receives the action too, though built-ins ignore it."""

    def __init__(self, adapter: SimulatorAdapter):
        self.adapter = adapter

    def compute(self, fragments: StepFragments, actions: tuple) -> tuple:
        return fragments.reward


class EnvCore:
    """Control interface the orchestrator drives: reset, step, render_info."""

    def __init__(self, simulator: Simulator, adapter: SimulatorAdapter, *,
                 max_episode_steps: int = 100, params: Mapping[str, Any] | None = None,
                 env_id: str = ""):
        if max_episode_steps < 1:
            raise InvalidParams("max_episode_steps must be >= 1")
        self.env_id = env_id or simulator.name
        self.simulator = simulator
        self.adapter = adapter
        self.agent_ids = tuple(adapter.agent_ids)
        self.observation_space = adapter.observation_space
        self.action_space = adapter.action_space
        self.max_episode_steps = int(max_episode_steps)
        # Unresolved, so derived defaults (e.g. the goal cell) follow reset overrides.
        self.base_params = dict(params or {})
        self.params = simulator.resolve_params(self.base_params)
        self.action_manager = ActionManager(self.action_space, len(self.agent_ids))
        self.observation_manager = ObservationManager(adapter)
        self.reward_manager = RewardManager(adapter)
        self._state = None
        self._obs: tuple | None = None
        self.steps = 0
        self.finished = False

    @property
    def num_agents(self) -> int:
        return len(self.agent_ids)

    @property
    def initialized(self) -> bool:
        return self._state is not None

    def reset(self, seed: int | None = None, params: Mapping[str, Any] | None = None) -> tuple:
        resolved = self.simulator.resolve_params({**self.base_params, **(params or {})})
        self._state = self.simulator.sim_reset(seed, resolved, prev=self._state)
        self.params = resolved
        self.steps = 0
        self.finished = False
        self._obs = self.adapter.initial_observation(self._state)
        return self._obs

    def step(self, action) -> StepResult:
        if self._state is None:
            raise NotInitialized("step called before reset")
        if self.finished:
            raise EpisodeFinished("episode has ended; call reset first")
        actions = self.action_manager.process(action)
        self._state, fragments = sim_step_via_adapter(self.adapter, self.simulator, self._state, actions)
        obs = self.observation_manager.collect(fragments)
        reward = self.reward_manager.compute(fragments, actions)
        self.steps += 1
        terminated = fragments.terminated
        truncated = self.steps >= self.max_episode_steps
        self.finished = terminated or truncated
        self._obs = obs
        return StepResult(obs, reward, terminated, truncated)

    @property
    def last_obs(self) -> tuple | None:
        return self._obs

    def render_info(self) -> RenderInfo:
        if self._state is None:
            raise NotInitialized("render_info called before reset")
        return self.simulator.render_info(self._state)

    # -- snapshot / restore (simulator bytes plus episode counters) ---------
    def snapshot(self) -> dict:
        if self._state is None:
            raise NotInitialized("snapshot called before reset")
        return {
            "sim": self.simulator.sim_snapshot(self._state).hex(),
            "steps": self.steps,
            "finished": self.finished,
            "obs": list(self._obs),
            "params": _jsonable_params(self.params),
        }

    def restore(self, snap: Mapping[str, Any]) -> None:
        self._state = self.simulator.sim_restore(bytes.fromhex(snap["sim"]))
        self.steps = int(snap["steps"])
        self.finished = bool(snap["finished"])
        self._obs = tuple(int(o) for o in snap["obs"])
        self.params = self.simulator.resolve_params(snap["params"])


def _jsonable_params(params: Mapping[str, Any]) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}


def encode_state(obj: Mapping[str, Any]) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def decode_state(data: bytes) -> dict:
    try:
        return json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SimulatorError(f"corrupt simulator snapshot: {exc}") from exc


def check_unknown(schema: Mapping[str, ParamSpec], params: Mapping[str, Any]) -> None:
    unknown = sorted(set(params) - set(schema))
    if unknown:
        raise InvalidParams(f"unknown parameter(s): {', '.join(unknown)}")

