from .agents import (
    AGENT_CLASSES,
    A2CAgent,
    Actor,
    CentralMARLAgent,
    QLearningAgent,
    ReinforceAgent,
    TabularAgent,
    make_agent,
)
from .approximators import (
    POLICY_LOGITS,
    Q_TABLE,
    V_TABLE,
    TabularParams,
    evaluate,
    select_action,
    softmax,
)
from .buffers import ReplayBuffer, RolloutBuffer, buffer_drain, buffer_push, buffer_sample
from .learners import (
    CentralLearner,
    UpdateStats,
    a2c_update,
    central_marl_update,
    policy_gradient,
    q_update,
    reinforce_update,
)
from .oracle import TabularModel, bandit_model, gridworld_model, value_iteration_oracle

__all__ = [
    "AGENT_CLASSES", "A2CAgent", "Actor", "CentralMARLAgent", "QLearningAgent",
    "ReinforceAgent", "TabularAgent", "make_agent", "POLICY_LOGITS", "Q_TABLE", "V_TABLE",
    "TabularParams", "evaluate", "select_action", "softmax", "ReplayBuffer", "RolloutBuffer",
    "buffer_drain", "buffer_push", "buffer_sample", "CentralLearner", "UpdateStats",
    "a2c_update", "central_marl_update", "policy_gradient", "q_update", "reinforce_update",
    "TabularModel", "bandit_model", "gridworld_model", "value_iteration_oracle",
]
