"""Built-in simulators and their adapters: GridWorld, Bernoulli bandit, matrix game."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, NamedTuple

import numpy as np

from ..core import Space
from ..errors import InvalidParams
from ..rng import make_rng, rng_from_state, rng_state
from .base import (
    ParamSpec,
    RenderInfo,
    SimTrace,
    check_unknown,
    decode_state,
    encode_state,
)


class Control(NamedTuple):
    """A simulator control command, e.g. ``move(+0,+1)``."""

    name: str
    args: tuple

    def __str__(self):
        if self.name == "move":
            return f"{self.name}({self.args[0]:+d},{self.args[1]:+d})"
        return f"{self.name}({','.join(str(a) for a in self.args)})"


def _fresh_rng(seed, prev_rng):
    if seed is not None:
        return make_rng(seed)
    if prev_rng is not None:
        return prev_rng
    return np.random.default_rng()


# ---------------------------------------------------------------------------
# GridWorld
# ---------------------------------------------------------------------------
UP, RIGHT, DOWN, LEFT = 0, 1, 2, 3
MOVES = {UP: (-1, 0), RIGHT: (0, 1), DOWN: (1, 0), LEFT: (0, -1)}


@dataclass
class GridState:
    row: int
    col: int
    grid_size: int
    goal_row: int
    goal_col: int


class GridWorldSimulator:
    """Deterministic grid. Moves that would leave the grid keep the position.

    ``width`` fixes the id layout (``row * width + col``); a smaller
    ``grid_size`` at reset uses the top-left corner of that layout, so tables
    keep their meaning across curriculum stages.
    """

    name = "gridworld"

    def __init__(self, width: int = 4):
        if width < 2:
            raise InvalidParams("grid width must be >= 2")
        self.width = width
        self.param_schema = {
            "grid_size": ParamSpec("int", 2, width),
            "goal_row": ParamSpec("int", 0, width - 1),
            "goal_col": ParamSpec("int", 0, width - 1),
        }

    def resolve_params(self, params: Mapping[str, Any] | None) -> dict:
        params = dict(params or {})
        check_unknown(self.param_schema, params)
        out = {k: self.param_schema[k].check(k, v) for k, v in params.items()}
        size = out.setdefault("grid_size", self.width)
        out.setdefault("goal_row", size - 1)
        out.setdefault("goal_col", size - 1)
        if out["goal_row"] >= size or out["goal_col"] >= size:
            raise InvalidParams(f"goal ({out['goal_row']},{out['goal_col']}) outside a {size}x{size} grid")
        if (out["goal_row"], out["goal_col"]) == (0, 0):
            raise InvalidParams("goal may not coincide with the start cell")
        return out

    def sim_reset(self, seed, params, prev=None) -> GridState:
        return GridState(0, 0, params["grid_size"], params["goal_row"], params["goal_col"])

    def sim_advance(self, state: GridState, control: Control):
        if control.name != "move":
            raise ValueError(f"gridworld cannot apply {control}")
        dr, dc = control.args
        r, c = state.row + dr, state.col + dc
        events = set()
        if 0 <= r < state.grid_size and 0 <= c < state.grid_size:
            state.row, state.col = r, c
        else:
            events.add("bump")
        if (state.row, state.col) == (state.goal_row, state.goal_col):
            events.add("goal")
        return state, SimTrace({"row": state.row, "col": state.col}, frozenset(events))

    def sim_snapshot(self, state: GridState) -> bytes:
        return encode_state({
            "row": state.row, "col": state.col, "grid_size": state.grid_size,
            "goal_row": state.goal_row, "goal_col": state.goal_col,
        })

    def sim_restore(self, data: bytes) -> GridState:
        d = decode_state(data)
        return GridState(d["row"], d["col"], d["grid_size"], d["goal_row"], d["goal_col"])

    def render_info(self, state: GridState) -> RenderInfo:
        return RenderInfo(
            scene="gridworld", rows=state.grid_size, cols=state.grid_size,
            agents=((state.row, state.col),), goals=((state.goal_row, state.goal_col),),
        )


class GridWorldAdapter:
    agent_ids = ("agent_0",)
    micro_steps = 1

    def __init__(self, width: int):
        self.width = width
        self.observation_space = Space(width * width)
        self.action_space = Space(4)

    def to_control(self, actions: tuple) -> Control:
        return Control("move", MOVES[actions[0]])

    def observe(self, trace: SimTrace) -> tuple:
        return (trace.payload["row"] * self.width + trace.payload["col"],)

    def reward(self, trace: SimTrace, actions: tuple) -> tuple:
        return (1.0 if "goal" in trace.events else 0.0,)

    def terminated(self, trace: SimTrace) -> bool:
        return "goal" in trace.events

    def initial_observation(self, state: GridState) -> tuple:
        return (state.row * self.width + state.col,)


# ---------------------------------------------------------------------------
# Bernoulli bandit
# ---------------------------------------------------------------------------
@dataclass
class BanditState:
    probs: tuple
    rng: np.random.Generator


class BanditSimulator:
    """One dummy state; pulling arm ``a`` pays 1 with probability ``probs[a]``."""

    name = "bandit"

    def __init__(self, arm_probabilities=(0.2, 0.8)):
        self.param_schema = {"arm_probabilities": ParamSpec("prob_list")}
        self.default_probs = self.param_schema["arm_probabilities"].check(
            "arm_probabilities", list(arm_probabilities))
        self.num_arms = len(self.default_probs)

    def resolve_params(self, params):
        params = dict(params or {})
        check_unknown(self.param_schema, params)
        probs = self.param_schema["arm_probabilities"].check(
            "arm_probabilities", params.get("arm_probabilities", self.default_probs))
        if len(probs) != self.num_arms:
            raise InvalidParams(f"arm_probabilities must have {self.num_arms} entries")
        return {"arm_probabilities": probs}

    def sim_reset(self, seed, params, prev=None) -> BanditState:
        return BanditState(params["arm_probabilities"], _fresh_rng(seed, prev.rng if prev else None))

    def sim_advance(self, state: BanditState, control: Control):
        if control.name != "pull":
            raise ValueError(f"bandit cannot apply {control}")
        arm = control.args[0]
        draw = 1.0 if state.rng.random() < state.probs[arm] else 0.0
        return state, SimTrace({"arm": arm, "draw": draw}, frozenset({"pulled"}))

    def sim_snapshot(self, state: BanditState) -> bytes:
        return encode_state({"probs": list(state.probs), "rng": rng_state(state.rng)})

    def sim_restore(self, data: bytes) -> BanditState:
        d = decode_state(data)
        return BanditState(tuple(d["probs"]), rng_from_state(d["rng"]))

    def render_info(self, state: BanditState) -> RenderInfo:
        return RenderInfo(scene="bandit", tags={"arms": len(state.probs)})


class BanditAdapter:
    agent_ids = ("agent_0",)
    micro_steps = 1
    observation_space = Space(1)

    def __init__(self, num_arms: int):
        self.action_space = Space(num_arms)

    def to_control(self, actions):
        return Control("pull", (actions[0],))

    def observe(self, trace):
        return (0,)

    def reward(self, trace, actions):
        return (trace.payload["draw"],)

    def terminated(self, trace):
        return True

    def initial_observation(self, state):
        return (0,)


# ---------------------------------------------------------------------------
# Two-agent coordination (matrix) game
# ---------------------------------------------------------------------------
@dataclass
class MatrixState:
    last: tuple | None = None


class MatrixGameSimulator:
    """Both agents act once; the team is paid 1.0 when the actions match."""

    name = "matrix_game"
    param_schema: dict = {}

    def resolve_params(self, params):
        params = dict(params or {})
        check_unknown(self.param_schema, params)
        return {}

    def sim_reset(self, seed, params, prev=None) -> MatrixState:
        return MatrixState()

    def sim_advance(self, state: MatrixState, control: Control):
        if control.name != "play":
            raise ValueError(f"matrix game cannot apply {control}")
        joint = tuple(control.args)
        state.last = joint
        event = "match" if len(set(joint)) == 1 else "mismatch"
        return state, SimTrace({"joint": joint}, frozenset({event}))

    def sim_snapshot(self, state: MatrixState) -> bytes:
        return encode_state({"last": list(state.last) if state.last is not None else None})

    def sim_restore(self, data: bytes) -> MatrixState:
        d = decode_state(data)
        return MatrixState(tuple(d["last"]) if d["last"] is not None else None)

    def render_info(self, state: MatrixState) -> RenderInfo:
        return RenderInfo(scene="matrix_game", tags={"agents": 2, "actions": 2, "last": state.last})


class MatrixGameAdapter:
    agent_ids = ("agent_0", "agent_1")
    micro_steps = 1
    observation_space = Space(1)
    action_space = Space(2)

    def to_control(self, actions):
        return Control("play", tuple(actions))

    def observe(self, trace):
        return (0, 0)

    def reward(self, trace, actions):
        r = 1.0 if "match" in trace.events else 0.0
        return (r, r)

    def terminated(self, trace):
        return True

    def initial_observation(self, state):
        return (0, 0)
