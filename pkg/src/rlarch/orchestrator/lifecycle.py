"""Lifecycle Manager: training and evaluation loops and the stop check.

Training proceeds in synchronous rounds. At a round boundary the coordinator

1. checks the stopping criteria;
2. looks up curriculum params for the current progress (read at every
   episode reset during the round);
3. freezes the acting policies (a copy when workers run in parallel) and the
   exploration rate ``epsilon_at(global_step)``;
4. collects one round: each env instance runs the agent's round budget;
5. walks the merged segments in env-instance order, advancing the global
   step per joint step, feeding each segment to the learner and logging the
   episodes that ended in it;
6. writes a checkpoint if the interval was crossed.

Episode returns are discounted with the config's gamma. For several agents
the per-step reward is the mean over agents (the team reward).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from ..agent.agents import Actor, make_agent
from ..agent.approximators import V_TABLE, TabularParams
from ..core import RunProgress
from ..env import make_env
from ..monitoring import render
from ..errors import ConfigMismatch, InvalidArgument, InvalidParams, RLArchError, RunFailed
from ..persistence import (
    Checkpoint,
    CurriculumSchedule,
    load_checkpoint,
    save_checkpoint,
    schedule_params,
)
from ..rng import make_rng, mix_seed
from .distributed import CollectionPool, plan_placement, spawn_workers


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.stop


CONTINUE = StopDecision(False)


def check_stop(criteria, progress: RunProgress, recent_returns: Sequence[float]) -> StopDecision:
    """Stop when any bound is met; the reason names the first one that is."""
    if criteria.max_global_steps is not None and progress.global_step >= criteria.max_global_steps:
        return StopDecision(True, "max_global_steps")
    if criteria.max_episodes is not None and progress.episode_count >= criteria.max_episodes:
        return StopDecision(True, "max_episodes")
    if criteria.reward_threshold is not None:
        k = criteria.window
        recent = list(recent_returns)
        if len(recent) >= k and sum(recent[-k:]) / k >= criteria.reward_threshold:
            return StopDecision(True, "reward_threshold")
    return CONTINUE


def fraction_complete(criteria, global_step: int, episode_count: int) -> float:
    fracs = []
    for bound, done in ((criteria.max_global_steps, global_step), (criteria.max_episodes, episode_count)):
        if bound is not None:
            fracs.append(1.0 if bound == 0 else min(done / bound, 1.0))
    return max(fracs) if fracs else 0.0


@dataclass(frozen=True)
class EvalResult:
    mean: float
    std: float
    min: float
    max: float
    returns: tuple
    episodes: int


@dataclass
class Services:
    """Persistence and monitoring handles for one run."""

    run_id: str = "run"
    logger: object | None = None  # MetricLogger
    checkpoint_path: Path | None = None
    recorder: object | None = None  # FrameRecorder for the final evaluation


@dataclass
class RunResult:
    run_id: str
    global_step: int
    episode_count: int
    stop_reason: str | None
    evaluation: EvalResult | None
    tables: dict = field(default_factory=dict)
    checkpoint_path: Path | None = None
    config_digest: str = ""


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------
def _acting_params(config, env, params) -> dict:
    """Normalize a params snapshot to agent id -> TabularParams."""
    if isinstance(params, TabularParams):
        params = {ag: params for ag in env.agent_ids}
    elif isinstance(params, Mapping) and not all(ag in params for ag in env.agent_ids):
        mapping = config.policy_mapping or {}
        try:
            params = {ag: params[mapping[ag]] for ag in env.agent_ids}
        except KeyError as exc:
            raise InvalidParams(f"no params for agent or policy {exc}") from None
    out = {}
    for ag in env.agent_ids:
        p = params[ag]
        if p.kind == V_TABLE:
            raise InvalidParams(f"{ag}: a V-table cannot act")
        if p.table.shape != (env.observation_space.size, env.action_space.size):
            raise InvalidParams(f"{ag}: params shaped {p.table.shape}, env needs "
                                f"({env.observation_space.size}, {env.action_space.size})")
        out[ag] = p
    return out


def _final_params(config) -> dict:
    if config.curriculum:
        return schedule_params(CurriculumSchedule.from_config(config.curriculum), 1.0)
    return {}


def run_evaluation(config, params, episodes: int, mode: str = "exploit",
                   recorder=None) -> EvalResult:
    """Run ``episodes`` episodes without learning.

    Exploit mode is the default; ``explore`` evaluates the stochastic policy
    (with epsilon 0 for Q-tables). The env and action streams derive from
    ``(seed, "eval")`` so training streams stay untouched. With a recorder,
    the first episode's frames are captured.
    """
    if int(episodes) != episodes or episodes < 1:
        raise InvalidArgument("episodes must be a positive integer")
    env = make_env(config.env.id, config.env.params, config.env.max_episode_steps)
    actor = Actor(_acting_params(config, env, params), mode, 0.0)
    gamma = config.hyperparameters.gamma
    rng = make_rng(mix_seed(config.seed, "eval", "act"))
    reset_params = _final_params(config)
    n_agents = len(env.agent_ids)
    returns = []
    for ep in range(int(episodes)):
        obs = env.reset(seed=mix_seed(config.seed, "eval") if ep == 0 else None, params=reset_params)
        if recorder is not None and ep == 0:
            _record(recorder, env)
        ret, weight = 0.0, 1.0
        while True:
            joint = tuple(actor.act(ag, obs[i], rng) for i, ag in enumerate(env.agent_ids))
            result = env.step(joint)
            if recorder is not None and ep == 0:
                _record(recorder, env)
            ret += weight * (sum(result.reward) / n_agents)
            weight *= gamma
            obs = result.obs
            if result.done:
                break
        returns.append(ret)
    mean = sum(returns) / len(returns)
    var = sum((r - mean) ** 2 for r in returns) / len(returns)
    return EvalResult(mean, var ** 0.5, min(returns), max(returns), tuple(returns), len(returns))


def _record(recorder, env) -> None:
    info = env.render_info()
    if info.spatial:
        recorder.record(render(info, "rgb_array"))


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------
class Trainer:
    """Coordinator-side state of one training run."""

    def __init__(self, config, services: Services | None = None):
        self.config = config
        self.services = services or Services()
        self.run_id = self.services.run_id
        probe = make_env(config.env.id, config.env.params, config.env.max_episode_steps)
        self.agent = make_agent(config, probe)
        self.num_agents = len(probe.agent_ids)
        self.schedule = CurriculumSchedule.from_config(config.curriculum) if config.curriculum else None
        self.reset_params = schedule_params(self.schedule, 0.0) if self.schedule else {}
        self.stage = 0
        self.plan = plan_placement(config)
        self.pool = CollectionPool(spawn_workers(self.plan, self.reset_params))
        n = config.num_envs
        self.global_step = 0
        self.episode_count = 0
        self.rounds = 0
        self.ep_returns = [0.0] * n
        self.ep_weights = [1.0] * n
        self.ep_lengths = [0] * n
        self.recent = deque(maxlen=config.stop.window)
        self.pending: list[float] = []
        interval = config.checkpoint_interval_steps
        self.next_checkpoint = interval if interval else None
        self.in_round = False
        self.stop_reason: str | None = None

    # -- progress ----------------------------------------------------------
    def progress(self) -> RunProgress:
        return RunProgress(self.global_step, self.episode_count,
                           fraction_complete(self.config.stop, self.global_step, self.episode_count))

    def stop_decision(self) -> StopDecision:
        return check_stop(self.config.stop, self.progress(), self.recent)

    # -- the loop ------------------------------------------------------------
    def run(self) -> RunResult:
        try:
            while True:
                decision = self.stop_decision()
                if decision:
                    self.stop_reason = decision.reason
                    break
                self.run_round()
                self._maybe_checkpoint()
            if self.services.checkpoint_path is not None:
                self.save(self.services.checkpoint_path)
            evaluation = None
            if self.config.eval_episodes > 0:
                evaluation = run_evaluation(self.config, self.agent.acting_policies(),
                                            self.config.eval_episodes, recorder=self.services.recorder)
        except RunFailed:
            raise
        except RLArchError as exc:
            raise RunFailed(self.run_id, self.global_step, exc) from exc
        finally:
            self.pool.close()
        return RunResult(
            run_id=self.run_id, global_step=self.global_step, episode_count=self.episode_count,
            stop_reason=self.stop_reason, evaluation=evaluation,
            tables={k: v.copy() for k, v in self.agent.tables.items()},
            checkpoint_path=self.services.checkpoint_path, config_digest=self.config.digest(),
        )

    def run_round(self) -> None:
        agent = self.agent
        if self.schedule is not None:
            frac = self.progress().fraction_complete
            self.stage = self.schedule.stage_index(frac)
            self.reset_params = schedule_params(self.schedule, frac)
            self.pool.set_reset_params(self.reset_params)
        steps, episodes = agent.round_budget()
        actor = agent.actor(self.global_step, copy=not self.plan.inline)
        self.in_round = True
        try:
            segments = self.pool.collect_segments(actor, steps, episodes, self.config.lifecycle)
        finally:
            self.in_round = False
        gamma = self.config.hyperparameters.gamma
        for env_i, segment in enumerate(segments):
            ended = []
            for step in segment:
                self.global_step += 1
                reward = sum(t.reward for t in step) / self.num_agents
                self.ep_returns[env_i] += self.ep_weights[env_i] * reward
                self.ep_weights[env_i] *= gamma
                self.ep_lengths[env_i] += 1
                if step[0].done:
                    ended.append((self.global_step, self.ep_returns[env_i], self.ep_lengths[env_i]))
                    self.ep_returns[env_i], self.ep_weights[env_i], self.ep_lengths[env_i] = 0.0, 1.0, 0
            for stats in agent.learn_segment(segment):
                self.pending.append(agent.signal(stats))
            for gs, ret, length in ended:
                self._episode_end(gs, ret, length, actor.epsilon)
        self.rounds += 1

    def _episode_end(self, global_step: int, ret: float, length: int, epsilon: float) -> None:
        episode = self.episode_count
        self.episode_count += 1
        self.recent.append(ret)
        logger = self.services.logger
        if logger is None:
            self.pending.clear()
            return
        logger.log_value(global_step, episode, "episode_return", ret)
        logger.log_value(global_step, episode, "episode_length", float(length))
        if self.pending:
            logger.log_value(global_step, episode, self.agent.signal_key,
                             sum(self.pending) / len(self.pending))
            self.pending.clear()
        if self.agent.algorithm == "q_learning":
            logger.log_value(global_step, episode, "epsilon", epsilon)
        logger.flush()

    # -- checkpoints ---------------------------------------------------------
    def _maybe_checkpoint(self) -> None:
        interval = self.config.checkpoint_interval_steps
        if not interval or self.services.checkpoint_path is None:
            return
        if self.global_step >= self.next_checkpoint:
            self.save(self.services.checkpoint_path)
            self.next_checkpoint = (self.global_step // interval + 1) * interval

    def save(self, path) -> None:
        save_checkpoint(self, path)

    def checkpoint(self) -> Checkpoint:
        logger = self.services.logger
        envs = self.pool.state()
        return Checkpoint(
            config_digest=self.config.digest(),
            run_id=self.run_id,
            algorithm=self.config.algorithm,
            global_step=self.global_step,
            episode_count=self.episode_count,
            config=self.config.to_dict(),
            tables={k: v.copy() for k, v in self.agent.tables.items()},
            buffers=self.agent.buffer_states(),
            rng={
                "learner": self.agent.learner_state(),
                "eval": {"seed": mix_seed(self.config.seed, "eval")},
                "actions": [{"index": e["index"], "state": e.pop("rng")} for e in envs],
                "workers": [{"index": w.index, "seed": w.seed, "env_indices": list(w.env_indices)}
                            for w in self.plan.workers],
            },
            envs=envs,
            counters={
                "rounds": self.rounds,
                "ep_returns": list(self.ep_returns),
                "ep_weights": list(self.ep_weights),
                "ep_lengths": list(self.ep_lengths),
                "recent_returns": list(self.recent),
                "pending_signals": list(self.pending),
                "next_checkpoint": self.next_checkpoint,
                "log_offset": logger.tell() if logger is not None else 0,
            },
            curriculum={
                "progress": self.progress().fraction_complete,
                "stage": self.stage,
                "params": dict(self.reset_params),
            },
        )

    def restore(self, ckpt: Checkpoint) -> None:
        if len(ckpt.envs) != self.config.num_envs:
            raise InvalidArgument(f"checkpoint holds {len(ckpt.envs)} env instances, "
                                  f"config asks for {self.config.num_envs}")
        self.agent.load_tables(ckpt.tables)
        self.agent.load_buffer_states(ckpt.buffers)
        self.agent.load_learner_state(ckpt.rng["learner"])
        action_states = {int(a["index"]): a["state"] for a in ckpt.rng["actions"]}
        self.pool.load_state([{**e, "rng": action_states[int(e["index"])]} for e in ckpt.envs])
        c = ckpt.counters
        self.global_step = ckpt.global_step
        self.episode_count = ckpt.episode_count
        self.rounds = int(c["rounds"])
        self.ep_returns = [float(x) for x in c["ep_returns"]]
        self.ep_weights = [float(x) for x in c["ep_weights"]]
        self.ep_lengths = [int(x) for x in c["ep_lengths"]]
        self.recent = deque((float(x) for x in c["recent_returns"]), maxlen=self.config.stop.window)
        self.pending = [float(x) for x in c["pending_signals"]]
        interval = self.config.checkpoint_interval_steps
        if interval:
            self.next_checkpoint = (self.global_step // interval + 1) * interval
        self.stage = int(ckpt.curriculum.get("stage", 0))
        self.reset_params = dict(ckpt.curriculum.get("params", {}))
        self.pool.set_reset_params(self.reset_params)
        if self.services.logger is not None:
            self.services.logger.truncate(int(c["log_offset"]))


def run_training(config, services: Services | None = None, resume_from=None) -> RunResult:
    """Train until the stopping criteria fire.

    ``resume_from`` (a checkpoint path or :class:`Checkpoint`) restores the
    full run state; the config digest must match. Otherwise, if the config
    names ``transfer_init``, its tables seed the agent and everything else
    starts fresh.
    """
    trainer = Trainer(config, services)
    if resume_from is not None:
        ckpt = resume_from if isinstance(resume_from, Checkpoint) else load_checkpoint(resume_from, "resume", config)
        if ckpt.config_digest != config.digest():
            raise ConfigMismatch("checkpoint digest does not match config")
        trainer.restore(ckpt)
    elif config.transfer_init:
        trainer.agent.load_tables(load_checkpoint(config.transfer_init, "transfer").tables)
    return trainer.run()

