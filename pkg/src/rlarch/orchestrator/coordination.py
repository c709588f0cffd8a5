"""Multi-Agent Coordinator: policy assignment, joint actions, experience split."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..core import Transition
from ..errors import InvalidArgument, MissingAgent


@dataclass
class PolicyMapping:
    """agent id -> policy id, and policy id -> approximator instance.

    Many agents may share one policy id (and therefore one table).
    """

    agent_to_policy: dict
    policies: dict = field(default_factory=dict)

    def __post_init__(self):
        unbound = sorted(set(self.policies) - set(self.agent_to_policy.values()))
        if unbound and self.policies:
            raise InvalidArgument(f"policies without agents: {unbound}")

    def check_total(self, agent_ids: Sequence[str]) -> None:
        for ag in agent_ids:
            if ag not in self.agent_to_policy:
                raise MissingAgent(ag)

    def policy_of(self, agent_id: str):
        try:
            return self.policies[self.agent_to_policy[agent_id]]
        except KeyError:
            raise MissingAgent(agent_id) from None

    def shared(self) -> bool:
        return len(set(self.agent_to_policy.values())) < len(self.agent_to_policy)


def assemble_joint_action(per_agent_actions: Mapping[str, int], mapping: PolicyMapping | None,
                          agent_order: Sequence[str]) -> tuple:
    """Order individual actions by the environment's canonical agent order."""
    if mapping is not None:
        mapping.check_total(agent_order)
    joint = []
    for ag in agent_order:
        if ag not in per_agent_actions:
            raise MissingAgent(ag)
        joint.append(per_agent_actions[ag])
    return tuple(joint)


def split_experience(result, joint_action: Sequence[int], prev_obs: Sequence[int],
                     mapping: PolicyMapping | None, agent_order: Sequence[str]) -> dict:
    """Per-agent transitions from one joint step; termination flags are shared."""
    n = len(agent_order)
    if not (len(result.obs) == len(result.reward) == len(joint_action) == len(prev_obs) == n):
        raise InvalidArgument("step result does not cover every agent")
    if mapping is not None:
        mapping.check_total(agent_order)
    return {
        ag: Transition(int(prev_obs[i]), int(joint_action[i]), float(result.reward[i]),
                       int(result.obs[i]), bool(result.terminated), bool(result.truncated), ag)
        for i, ag in enumerate(agent_order)
    }
