from .base import (
    ActionManager,
    EnvCore,
    ObservationManager,
    ParamSpec,
    RenderInfo,
    RewardManager,
    SimTrace,
    StepFragments,
    StepResult,
    sim_step_via_adapter,
)
from .registry import ENV_REGISTRY, make_env
from .simulators import (
    DOWN,
    LEFT,
    RIGHT,
    UP,
    BanditAdapter,
    BanditSimulator,
    Control,
    GridWorldAdapter,
    GridWorldSimulator,
    MatrixGameAdapter,
    MatrixGameSimulator,
)
from .vector import VecEnv, vec_step

__all__ = [
    "ActionManager", "EnvCore", "ObservationManager", "ParamSpec", "RenderInfo",
    "RewardManager", "SimTrace", "StepFragments", "StepResult", "sim_step_via_adapter",
    "ENV_REGISTRY", "make_env", "UP", "RIGHT", "DOWN", "LEFT", "BanditAdapter",
    "BanditSimulator", "Control", "GridWorldAdapter", "GridWorldSimulator",
    "MatrixGameAdapter", "MatrixGameSimulator", "VecEnv", "vec_step",
]
