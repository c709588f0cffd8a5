"""Learners: update rules applied to tabular approximators.

Softmax score function used by the policy-gradient learners: for a state s
with probabilities pi and taken action a, the gradient of ``ln pi(a|s)`` with
respect to ``logits[s, b]`` is ``[b == a] - pi(b|s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..core import Hyperparameters, Trajectory, returns_to_go
from ..errors import InvalidArgument
from .approximators import POLICY_LOGITS, Q_TABLE, V_TABLE, TabularParams


@dataclass(frozen=True)
class UpdateStats:
    mean_td_error: float = 0.0
    mean_advantage: float = 0.0
    mean_return: float = 0.0
    entries_consumed: int = 0


def _require(params: TabularParams, kind: str, role: str) -> None:
    if params.kind != kind:
        raise InvalidArgument(f"{role} must be a {kind}, got {params.kind}")


def _probs(row: list) -> list:
    m = max(row)
    exps = [math.exp(v - m) for v in row]
    s = sum(exps)
    return [e / s for e in exps]


def _score_step(row: list, action: int, weight: float) -> None:
    """In place: row += weight * d ln softmax(row)[action] / d row."""
    pi = _probs(row)
    for b in range(len(row)):
        row[b] += weight * ((1.0 if b == action else 0.0) - pi[b])


def policy_gradient(policy: TabularParams, steps: Sequence[tuple[int, int, float]]) -> dict:
    """Gradient of ``sum_t w_t * ln pi(a_t|s_t)`` at the current logits.

    Returns ``{state: per-action gradient list}``; ``steps`` holds (s, a, w).
    """
    table = policy.table
    grad: dict[int, list] = {}
    for s, a, w in steps:
        pi = _probs(table[s].tolist())
        g = grad.setdefault(s, [0.0] * len(pi))
        for b in range(len(pi)):
            g[b] += w * ((1.0 if b == a else 0.0) - pi[b])
    return grad


def _apply(policy: TabularParams, grad: Mapping[int, list], alpha: float) -> None:
    for s, g in grad.items():
        policy.table[s] += alpha * np.asarray(g)


def _check_bounds(params: TabularParams, s: int, a: int | None = None) -> None:
    if not 0 <= s < params.num_states:
        raise InvalidArgument(f"state {s} outside table")
    if a is not None and not 0 <= a < params.num_actions:
        raise InvalidArgument(f"action {a} outside table")


def reinforce_update(policy: TabularParams, trajectory, hp: Hyperparameters) -> UpdateStats:
    """Monte-Carlo policy gradient without baseline.

    Every step's gradient is evaluated at the pre-update logits, then the sum
    is applied once (a single ascent step on the episode objective).
    """
    _require(policy, POLICY_LOGITS, "policy")
    transitions = list(trajectory.transitions if isinstance(trajectory, Trajectory) else trajectory)
    if not transitions:
        raise InvalidArgument("trajectory is empty")
    for t in transitions:
        _check_bounds(policy, t.obs, t.action)
    returns = returns_to_go([t.reward for t in transitions], hp.gamma)
    grad = policy_gradient(policy, [(t.obs, t.action, g) for t, g in zip(transitions, returns)])
    _apply(policy, grad, hp.alpha)
    return UpdateStats(mean_return=sum(returns) / len(returns), entries_consumed=len(transitions))


def q_update(q: TabularParams, batch: Sequence, hp: Hyperparameters) -> UpdateStats:
    """Sequential one-step Q-learning over ``batch`` (later items see earlier updates)."""
    _require(q, Q_TABLE, "q")
    if not batch:
        raise InvalidArgument("batch is empty")
    rows = q.table.tolist()
    n_s, n_a = len(rows), len(rows[0])
    gamma, alpha = hp.gamma, hp.alpha
    total = 0.0
    for s, a, r, s2, terminated, *_ in batch:
        if not (0 <= s < n_s and 0 <= s2 < n_s and 0 <= a < n_a):
            raise InvalidArgument(f"transition ({s}, {a}, {s2}) outside table bounds")
        target = r if terminated else r + gamma * max(rows[s2])
        delta = target - rows[s][a]
        rows[s][a] += alpha * delta
        total += delta
    q.table[:] = rows
    return UpdateStats(mean_td_error=total / len(batch), entries_consumed=len(batch))


def a2c_update(actor: TabularParams, critic: TabularParams, rollout: Sequence,
               hp: Hyperparameters) -> UpdateStats:
    """One-step advantage actor-critic, applied transition by transition.

    For each transition the advantage uses the critic as it stands before that
    transition's critic step; the actor step uses the same advantage.
    """
    _require(actor, POLICY_LOGITS, "actor")
    _require(critic, V_TABLE, "critic")
    if not rollout:
        raise InvalidArgument("rollout is empty")
    v = critic.table[:, 0].tolist()
    logits = actor.table.tolist()
    gamma = hp.gamma
    total = 0.0
    for t in rollout:
        s, a, s2 = t.obs, t.action, t.next_obs
        if not (0 <= s < len(v) and 0 <= s2 < len(v) and 0 <= a < len(logits[0])):
            raise InvalidArgument(f"transition {t} outside table bounds")
        bootstrap = 0.0 if t.terminated else gamma * v[s2]
        adv = t.reward + bootstrap - v[s]
        v[s] += hp.alpha_critic * adv
        _score_step(logits[s], a, hp.alpha * adv)
        total += adv
    critic.table[:, 0] = v
    actor.table[:] = logits
    return UpdateStats(mean_advantage=total / len(rollout), entries_consumed=len(rollout))


@dataclass
class CentralLearner:
    """Coordinator-side learner state for centralized multi-agent training."""

    updates: int = 0


def _aligned(rollouts: Mapping[str, Sequence]) -> int:
    lengths = {len(r) for r in rollouts.values()}
    if len(lengths) != 1:
        raise InvalidArgument(f"rollouts are misaligned: lengths {sorted(lengths)}")
    n = lengths.pop()
    if n == 0:
        raise InvalidArgument("rollouts are empty")
    ref = next(iter(rollouts.values()))
    for agent, r in rollouts.items():
        for i, (t, u) in enumerate(zip(r, ref)):
            if (t.terminated, t.truncated) != (u.terminated, u.truncated):
                raise InvalidArgument(f"rollout of {agent} diverges from the episode structure at step {i}")
    return n


def central_marl_update(learner_state: CentralLearner, per_agent_rollouts: Mapping[str, Sequence],
                        actors: Mapping[str, TabularParams], hp: Hyperparameters) -> UpdateStats:
    """Centralized policy-gradient step driven by the shared team return.

    The team reward at step t is the mean of the agents' rewards at t (equal to
    each agent's reward when rewards are already team rewards). Every agent's
    gradient is computed at the pre-update logits; all are then applied, so
    agents sharing one policy object accumulate into the same table.
    """
    missing = sorted(set(actors) ^ set(per_agent_rollouts))
    if missing:
        raise InvalidArgument(f"agents without both actor and rollout: {missing}")
    n = _aligned(per_agent_rollouts)
    agents = list(per_agent_rollouts)
    team = [sum(per_agent_rollouts[ag][i].reward for ag in agents) / len(agents) for i in range(n)]
    returns = returns_to_go(team, hp.gamma)
    grads = []
    for ag in agents:
        policy = actors[ag]
        _require(policy, POLICY_LOGITS, f"actor of {ag}")
        steps = []
        for t, g in zip(per_agent_rollouts[ag], returns):
            _check_bounds(policy, t.obs, t.action)
            steps.append((t.obs, t.action, g))
        grads.append((policy, policy_gradient(policy, steps)))
    for policy, grad in grads:
        _apply(policy, grad, hp.alpha)
    stats = UpdateStats(mean_return=sum(returns) / n, entries_consumed=n * len(agents))
    learner_state.updates += 1
    return stats
