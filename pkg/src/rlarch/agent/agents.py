"""Agents: approximator tables + learner + buffer, one class per algorithm.

The coordinator owns an agent. Collection only sees an :class:`Actor`, a
read-only acting view over the tables, so learners and buffers never leave
the coordinator context.

Per collection round an agent states its budget (``round_budget``): a fixed
number of steps per env instance, or one whole episode per instance. The
collected experience is then fed back one env segment at a time through
``learn_segment``, a segment being the list of steps one instance produced
in the round (each step a tuple of per-agent transitions).
"""

from __future__ import annotations

from typing import Mapping, Sequence

from ..core import Hyperparameters
from ..errors import InvalidArgument
from ..rng import make_rng, mix_seed, rng_from_state, rng_state
from .approximators import POLICY_LOGITS, Q_TABLE, V_TABLE, TabularParams, select_action
from .buffers import ReplayBuffer, RolloutBuffer
from .learners import (
    CentralLearner,
    UpdateStats,
    a2c_update,
    central_marl_update,
    q_update,
    reinforce_update,
)


class Actor:
    """Acting view over a set of policies; holds no learner state.

    Per step, actions are drawn for the agents in canonical order from the
    instance's action stream, then the environment steps. ``interact`` is
    the delegated strategy: the actor drives the handle itself.
    """

    def __init__(self, policies: Mapping[str, TabularParams], mode: str = "explore",
                 epsilon: float = 0.0):
        self.policies = dict(policies)
        self.mode = mode
        self.epsilon = epsilon

    def act(self, agent_id: str, obs: int, rng) -> int:
        return select_action(self.policies[agent_id], obs, rng, self.mode, self.epsilon)

    def interact(self, handle, steps: int = 0, episodes: int = 0) -> int:
        """Step ``handle`` until ``steps`` steps or ``episodes`` episode ends."""
        taken = ended = 0
        while (steps and taken < steps) or (episodes and ended < episodes):
            obs = handle.obs
            actions = {ag: self.act(ag, obs[i], handle.rng) for i, ag in enumerate(handle.agent_ids)}
            result = handle.step(actions)
            taken += 1
            ended += result.done
        return taken


class TabularAgent:
    algorithm = ""
    signal_key = "mean_return"

    def __init__(self, num_states: int, num_actions: int, agent_ids: Sequence[str],
                 policy_mapping: Mapping[str, str], hp: Hyperparameters, buffer_spec=None,
                 seed: int = 0):
        self.num_states = num_states
        self.num_actions = num_actions
        self.agent_ids = tuple(agent_ids)
        self.mapping = dict(policy_mapping)
        missing = [ag for ag in self.agent_ids if ag not in self.mapping]
        if missing:
            raise InvalidArgument(f"agents without a policy: {missing}")
        self.hp = hp
        self.buffer_spec = buffer_spec
        self.learner_rng = make_rng(mix_seed(seed, "learner"))
        self.tables: dict[str, TabularParams] = {}
        self._build()

    def _build(self) -> None:
        raise NotImplementedError

    # -- acting --------------------------------------------------------------
    def acting_policies(self) -> dict:
        return {ag: self.tables[self.mapping[ag]] for ag in self.agent_ids}

    def epsilon(self, global_step: int) -> float:
        return 0.0

    def actor(self, global_step: int = 0, mode: str = "explore", copy: bool = False) -> Actor:
        policies = self.acting_policies()
        if copy:
            copies = {}
            for ag, p in policies.items():
                copies.setdefault(id(p), p.copy())
            policies = {ag: copies[id(p)] for ag, p in policies.items()}
        return Actor(policies, mode, self.epsilon(global_step) if mode == "explore" else 0.0)

    def round_budget(self) -> tuple[int, int]:
        """(steps, episodes) per env instance per round; exactly one is nonzero."""
        return 0, 1

    # -- learning ------------------------------------------------------------
    def learn_segment(self, segment: Sequence[Sequence]) -> list[UpdateStats]:
        raise NotImplementedError

    def signal(self, stats: UpdateStats) -> float:
        return getattr(stats, self.signal_key)

    # -- state ---------------------------------------------------------------
    def buffer_states(self) -> dict:
        return {}

    def load_buffer_states(self, states: Mapping) -> None:
        pass

    def learner_state(self) -> dict:
        return {"rng": rng_state(self.learner_rng)}

    def load_learner_state(self, state: Mapping) -> None:
        self.learner_rng = rng_from_state(state["rng"])

    def load_tables(self, tables: Mapping[str, TabularParams]) -> None:
        for name, own in self.tables.items():
            if name not in tables:
                raise InvalidArgument(f"checkpoint has no table {name!r}")
            other = tables[name]
            if other.kind != own.kind or other.table.shape != own.table.shape:
                raise InvalidArgument(f"table {name!r} is {other.kind}{other.table.shape}, "
                                      f"expected {own.kind}{own.table.shape}")
            own.table[:] = other.table


class QLearningAgent(TabularAgent):
    algorithm = "q_learning"
    signal_key = "mean_td_error"

    def _build(self):
        self.tables = {"q": TabularParams.zeros(Q_TABLE, self.num_states, self.num_actions)}
        spec = self.buffer_spec
        self.batch_size = spec.batch_size
        self.replay = ReplayBuffer(spec.capacity)

    def epsilon(self, global_step):
        return self.hp.epsilon_at(global_step)

    def round_budget(self):
        return 1, 0

    def learn_segment(self, segment):
        # push, then one minibatch update, for every collected transition
        q, out = self.tables["q"], []
        for step in segment:
            self.replay.push(step[0])
            batch = self.replay.sample(self.batch_size, self.learner_rng)
            out.append(q_update(q, batch, self.hp))
        return out

    def buffer_states(self):
        return {"replay": self.replay.state_dict()}

    def load_buffer_states(self, states):
        self.replay.load_state_dict(states["replay"])


class ReinforceAgent(TabularAgent):
    algorithm = "reinforce"

    def _build(self):
        self.tables = {"policy": TabularParams.zeros(POLICY_LOGITS, self.num_states, self.num_actions)}
        self.rollout = RolloutBuffer()

    def learn_segment(self, segment):
        for step in segment:
            self.rollout.push(step[0])
        episode = self.rollout.drain()
        return [reinforce_update(self.tables["policy"], episode, self.hp)] if episode else []

    def buffer_states(self):
        return {"rollout": self.rollout.state_dict()}

    def load_buffer_states(self, states):
        self.rollout.load_state_dict(states["rollout"])


class A2CAgent(TabularAgent):
    algorithm = "a2c"
    signal_key = "mean_advantage"

    def _build(self):
        self.tables = {
            "actor": TabularParams.zeros(POLICY_LOGITS, self.num_states, self.num_actions),
            "critic": TabularParams.zeros(V_TABLE, self.num_states, 1),
        }
        self.rollout_length = self.buffer_spec.batch_size
        self.rollout = RolloutBuffer()

    def round_budget(self):
        return self.rollout_length, 0

    def learn_segment(self, segment):
        for step in segment:
            self.rollout.push(step[0])
        rollout = self.rollout.drain()
        if not rollout:
            return []
        return [a2c_update(self.tables["actor"], self.tables["critic"], rollout, self.hp)]

    def buffer_states(self):
        return {"rollout": self.rollout.state_dict()}

    def load_buffer_states(self, states):
        self.rollout.load_state_dict(states["rollout"])


class CentralMARLAgent(TabularAgent):
    """One centralized learner over all agents' experience and the team return."""

    algorithm = "central_marl"

    def _build(self):
        self.tables = {
            pid: TabularParams.zeros(POLICY_LOGITS, self.num_states, self.num_actions)
            for pid in sorted(set(self.mapping[ag] for ag in self.agent_ids))
        }
        self.rollouts = {ag: RolloutBuffer() for ag in self.agent_ids}
        self.central = CentralLearner()

    def learn_segment(self, segment):
        for step in segment:
            for ag, t in zip(self.agent_ids, step):
                self.rollouts[ag].push(t)
        per_agent = {ag: buf.drain() for ag, buf in self.rollouts.items()}
        if not per_agent[self.agent_ids[0]]:
            return []
        return [central_marl_update(self.central, per_agent, self.acting_policies(), self.hp)]

    def buffer_states(self):
        return {ag: buf.state_dict() for ag, buf in self.rollouts.items()}

    def load_buffer_states(self, states):
        for ag, buf in self.rollouts.items():
            buf.load_state_dict(states[ag])

    def learner_state(self):
        return {**super().learner_state(), "updates": self.central.updates}

    def load_learner_state(self, state):
        super().load_learner_state(state)
        self.central.updates = int(state["updates"])


AGENT_CLASSES = {
    cls.algorithm: cls for cls in (QLearningAgent, ReinforceAgent, A2CAgent, CentralMARLAgent)
}


def make_agent(config, env) -> TabularAgent:
    """Build the agent a config asks for, sized to ``env``'s spaces."""
    cls = AGENT_CLASSES[config.algorithm]
    return cls(env.observation_space.size, env.action_space.size, env.agent_ids,
               config.policy_mapping, config.hyperparameters, config.buffer, config.seed)
