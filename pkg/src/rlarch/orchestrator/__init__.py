from .config import (
    ALGORITHMS,
    DEFAULT_BUFFER,
    BufferSpec,
    CurriculumStage,
    EnvSpec,
    ExperimentConfig,
    StoppingCriteria,
    apply_overlay,
    config_from_dict,
    load_config,
    load_config_file,
    param_exists,
)
from .coordination import PolicyMapping, assemble_joint_action, split_experience
from .distributed import (
    CollectionPool,
    PlacementPlan,
    Worker,
    WorkerDescriptor,
    collect_parallel,
    plan_placement,
    spawn_workers,
)
from .lifecycle import (
    EvalResult,
    RunResult,
    Services,
    StopDecision,
    Trainer,
    check_stop,
    run_evaluation,
    run_training,
)
from .strategies import DELEGATED, MEDIATED, EnvHandle, mediated_loop

__all__ = [
    "ALGORITHMS", "DEFAULT_BUFFER", "BufferSpec", "CurriculumStage", "EnvSpec",
    "ExperimentConfig", "StoppingCriteria", "apply_overlay", "config_from_dict", "load_config",
    "load_config_file", "param_exists", "PolicyMapping", "assemble_joint_action",
    "split_experience", "CollectionPool", "PlacementPlan", "Worker", "WorkerDescriptor",
    "collect_parallel", "plan_placement", "spawn_workers", "EvalResult", "RunResult",
    "Services", "StopDecision", "Trainer", "check_stop", "run_evaluation", "run_training",
    "DELEGATED", "MEDIATED", "EnvHandle", "mediated_loop",
]
