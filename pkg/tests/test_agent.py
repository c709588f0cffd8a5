from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlarch.agent import (
    CentralLearner,
    ReplayBuffer,
    RolloutBuffer,
    TabularParams,
    a2c_update,
    bandit_model,
    buffer_drain,
    buffer_push,
    buffer_sample,
    central_marl_update,
    evaluate,
    gridworld_model,
    q_update,
    reinforce_update,
    select_action,
    value_iteration_oracle,
)
from rlarch.core import Hyperparameters, Transition
from rlarch.errors import EmptyBuffer, InvalidArgument, UnsupportedApproximator
from rlarch.rng import make_rng


def params(kind, rows):
    return TabularParams(kind, np.asarray(rows, dtype=float))


def tr(s, a, r, s2, terminated=False, truncated=False, agent=None):
    return Transition(s, a, r, s2, terminated, truncated, agent)


# -- approximators -----------------------------------------------------------
@pytest.mark.parametrize("kind, row, mode, expected", [
    ("QTable", [0.1, 0.9], "explore", 1),
    ("PolicyLogits", [0, 0], "exploit", 0),
    ("QTable", [0.5, 0.5, 0.2], "explore", 0),
])
def test_select_action_examples(kind, row, mode, expected):
    assert select_action(params(kind, [row]), 0, make_rng(0), mode, epsilon=0.0) == expected


def test_select_action_rejects_vtable():
    with pytest.raises(UnsupportedApproximator):
        select_action(params("VTable", [[0.0]]), 0, make_rng(0))


def test_select_action_rejects_unknown_state():
    with pytest.raises(InvalidArgument):
        select_action(params("QTable", [[0.0, 0.0]]), 3, make_rng(0))


def test_epsilon_one_is_uniform():
    q = params("QTable", [[0.0, 5.0, 0.0, 0.0]])
    rng = make_rng(1)
    counts = np.bincount([select_action(q, 0, rng, "explore", 1.0) for _ in range(8000)], minlength=4)
    assert np.all(np.abs(counts - 2000) < 3 * math.sqrt(8000 * 0.25 * 0.75))


def test_softmax_sampling_matches_probabilities():
    logits = params("PolicyLogits", [[math.log(3.0), 0.0]])
    rng = make_rng(2)
    n = 20000
    hits = sum(select_action(logits, 0, rng) == 0 for _ in range(n))
    assert abs(hits / n - 0.75) < 3 * math.sqrt(0.75 * 0.25 / n)


@pytest.mark.parametrize("kind, row, expected", [
    ("PolicyLogits", [0, 0], [0.5, 0.5]),
    ("PolicyLogits", [math.log(3), 0], [0.75, 0.25]),
    ("VTable", [0.7], [0.7]),
])
def test_evaluate_examples(kind, row, expected):
    np.testing.assert_allclose(evaluate(params(kind, [row]), 0), expected, atol=1e-15)


@given(st.lists(st.floats(-700, 700), min_size=1, max_size=8))
def test_evaluate_returns_probability_vector(row):
    p = evaluate(params("PolicyLogits", [row]), 0)
    assert np.all(p >= 0) and abs(p.sum() - 1.0) <= 1e-12


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=6), st.floats(1e-3, 1e3))
def test_argmax_invariant_under_positive_scaling(row, c):
    q = params("QTable", [row])
    scaled = params("QTable", [[c * v for v in row]])
    if len(set(row)) == len(row) and len(set(scaled.table[0])) == len(row):
        assert select_action(q, 0, make_rng(0), "exploit") == select_action(scaled, 0, make_rng(0), "exploit")


def test_params_round_trip_and_validation():
    p = params("QTable", [[1.0, 2.0]])
    assert TabularParams.from_dict(p.to_dict()) == p
    with pytest.raises(InvalidArgument):
        params("VTable", [[0.0, 1.0]])
    with pytest.raises(InvalidArgument):
        params("QTable", [[float("nan")]])
    with pytest.raises(InvalidArgument):
        params("Network", [[0.0]])


# -- buffers -----------------------------------------------------------------
def test_replay_fifo_examples():
    buf = ReplayBuffer(2)
    for t in ("t1", "t2", "t3"):
        buffer_push(buf, t)
    assert buf.contents() == ["t2", "t3"]
    one = ReplayBuffer(1)
    buffer_push(one, "t1")
    buffer_push(one, "t2")
    assert one.contents() == ["t2"]


def test_rollout_examples():
    buf = RolloutBuffer()
    buffer_push(buf, "t1")
    buffer_push(buf, "t2")
    assert buf.contents() == ["t1", "t2"]
    assert buffer_drain(buf) == ["t1", "t2"] and len(buf) == 0
    assert buffer_drain(buf) == [] and buffer_drain(buf) == []


def test_replay_sampling_edges():
    buf = ReplayBuffer(4)
    with pytest.raises(EmptyBuffer):
        buffer_sample(buf, 1, make_rng(0))
    buffer_push(buf, "t1")
    assert buffer_sample(buf, 3, make_rng(0)) == ["t1", "t1", "t1"]
    with pytest.raises(InvalidArgument):
        ReplayBuffer(0)


ops = st.lists(st.one_of(st.tuples(st.just("push"), st.integers()),
                         st.tuples(st.just("sample"), st.integers(1, 5))), max_size=200)


@given(st.integers(1, 20), ops)
def test_replay_capacity_and_fifo_property(capacity, operations):
    buf = ReplayBuffer(capacity)
    model: list = []
    rng = make_rng(0)
    for op, arg in operations:
        if op == "push":
            buf.push(arg)
            model = (model + [arg])[-capacity:]
        elif model:
            assert set(buf.sample(arg, rng)) <= set(model)
        assert len(buf) <= capacity
        assert buf.contents() == model


def test_replay_state_round_trip():
    buf = ReplayBuffer(3)
    for i in range(5):
        buf.push(tr(i, 0, 0.0, i + 1))
    clone = ReplayBuffer(3)
    clone.load_state_dict(buf.state_dict())
    assert clone.contents() == buf.contents()
    assert clone.sample(10, make_rng(5)) == buf.sample(10, make_rng(5))


# -- learners ----------------------------------------------------------------
def test_reinforce_example():
    policy = params("PolicyLogits", [[0.0, 0.0]])
    reinforce_update(policy, [tr(0, 0, 1.0, 0, True)], Hyperparameters(alpha=1.0, gamma=1.0))
    np.testing.assert_allclose(policy.table, [[0.5, -0.5]], atol=1e-15)
    assert evaluate(policy, 0)[0] == pytest.approx(1 / (1 + math.exp(-1.0)), abs=1e-6)


def test_reinforce_zero_return_leaves_logits():
    policy = params("PolicyLogits", [[0.3, -0.1], [0.0, 2.0]])
    before = policy.copy()
    reinforce_update(policy, [tr(0, 1, 0.0, 1), tr(1, 0, 0.0, 0, True)], Hyperparameters())
    assert policy == before


def test_reinforce_single_action_keeps_policy():
    policy = params("PolicyLogits", [[0.0]])
    reinforce_update(policy, [tr(0, 0, 1.0, 0, True)], Hyperparameters())
    np.testing.assert_array_equal(evaluate(policy, 0), [1.0])


def test_reinforce_rejects_empty_and_wrong_kind():
    with pytest.raises(InvalidArgument):
        reinforce_update(params("PolicyLogits", [[0.0, 0.0]]), [], Hyperparameters())
    with pytest.raises(InvalidArgument):
        reinforce_update(params("QTable", [[0.0, 0.0]]), [tr(0, 0, 1.0, 0, True)], Hyperparameters())


def test_q_update_examples():
    q = params("QTable", [[0.0, 0.0]])
    stats = q_update(q, [tr(0, 1, 1.0, 0, True)], Hyperparameters(alpha=0.1))
    assert q.table[0, 1] == pytest.approx(0.1) and stats.mean_td_error == pytest.approx(1.0)

    q = params("QTable", [[0.5, 0.0], [1.0, 0.2]])
    stats = q_update(q, [tr(0, 0, 0.0, 1)], Hyperparameters(alpha=0.5, gamma=0.99))
    assert stats.mean_td_error == pytest.approx(0.49, abs=1e-12)
    assert q.table[0, 0] == pytest.approx(0.745, abs=1e-12)

    q = params("QTable", [[1.0, 0.0]])
    q_update(q, [tr(0, 0, 1.0, 0, True)], Hyperparameters())
    np.testing.assert_array_equal(q.table, [[1.0, 0.0]])


def test_q_update_is_sequential():
    # the second copy of the transition sees the first one's update
    q = params("QTable", [[0.0]])
    q_update(q, [tr(0, 0, 1.0, 0, True)] * 2, Hyperparameters(alpha=0.5))
    assert q.table[0, 0] == pytest.approx(0.75)


def test_a2c_examples():
    hp = Hyperparameters(alpha=0.1, alpha_critic=0.3)
    actor, critic = params("PolicyLogits", [[0.0, 0.0]]), params("VTable", [[0.0]])
    stats = a2c_update(actor, critic, [tr(0, 1, 1.0, 0, True)], hp)
    assert stats.mean_advantage == 1.0 and critic.table[0, 0] == pytest.approx(0.3)
    assert evaluate(actor, 0)[1] > 0.5

    actor, critic = params("PolicyLogits", [[0.2, 0.0]] * 2), params("VTable", [[0.4], [0.4]])
    before = (actor.copy(), critic.copy())
    stats = a2c_update(actor, critic, [tr(0, 0, 0.0, 1)], Hyperparameters(gamma=1.0))
    assert stats.mean_advantage == 0.0 and (actor, critic) == before

    actor, critic = params("PolicyLogits", [[0.0, 0.0]] * 2), params("VTable", [[0.25], [9.0]])
    stats = a2c_update(actor, critic, [tr(0, 0, 1.0, 1)], Hyperparameters(gamma=0.0))
    assert stats.mean_advantage == pytest.approx(0.75)


def test_a2c_advantage_uses_pre_update_critic():
    hp = Hyperparameters(alpha=1.0, alpha_critic=1.0)
    actor, critic = params("PolicyLogits", [[0.0, 0.0]]), params("VTable", [[0.0]])
    a2c_update(actor, critic, [tr(0, 0, 1.0, 0, True)], hp)
    # with a post-update critic the advantage would be 0 and the actor would not move
    np.testing.assert_allclose(actor.table, [[0.5, -0.5]], atol=1e-15)


def test_central_marl_examples():
    hp = Hyperparameters(alpha=0.5, gamma=1.0)
    actors = {"a": params("PolicyLogits", [[0.0, 0.0]]), "b": params("PolicyLogits", [[0.0, 0.0]])}
    rollouts = {"a": [tr(0, 1, 1.0, 0, True)], "b": [tr(0, 1, 1.0, 0, True)]}
    learner = CentralLearner()
    central_marl_update(learner, rollouts, actors, hp)
    assert all(evaluate(p, 0)[1] > 0.5 for p in actors.values()) and learner.updates == 1

    zero = {"a": [tr(0, 0, 0.0, 0, True)], "b": [tr(0, 1, 0.0, 0, True)]}
    before = {k: v.copy() for k, v in actors.items()}
    central_marl_update(learner, zero, actors, hp)
    assert actors == before

    with pytest.raises(InvalidArgument):
        central_marl_update(learner, {"a": [tr(0, 0, 1.0, 0)] * 2, "b": [tr(0, 0, 1.0, 0)]}, actors, hp)


@given(st.lists(st.tuples(st.integers(0, 1), st.floats(-2, 2)), min_size=1, max_size=6),
       st.lists(st.floats(-3, 3), min_size=2, max_size=2))
def test_central_marl_preserves_symmetry(steps, init):
    hp = Hyperparameters(alpha=0.3, gamma=0.9)
    rollout = [tr(0, a, r, 0, i == len(steps) - 1) for i, (a, r) in enumerate(steps)]
    actors = {"a": params("PolicyLogits", [init]), "b": params("PolicyLogits", [init])}
    central_marl_update(CentralLearner(), {"a": rollout, "b": list(rollout)}, actors, hp)
    assert actors["a"] == actors["b"]


def fd_gradient(logits, s, a, g, h=1e-6):
    out = np.zeros(logits.shape[1])
    for b in range(logits.shape[1]):
        up, dn = logits.copy(), logits.copy()
        up[s, b] += h
        dn[s, b] -= h
        f = lambda t: g * math.log(np.exp(t[s] - t[s].max())[a] / np.exp(t[s] - t[s].max()).sum())
        out[b] = (f(up) - f(dn)) / (2 * h)
    return out


@settings(max_examples=40)
@given(st.integers(0, 2**32))
def test_reinforce_direction_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    n_s, n_a = int(rng.integers(1, 4)), int(rng.integers(2, 5))
    logits = rng.normal(size=(n_s, n_a))
    s, a, g = int(rng.integers(n_s)), int(rng.integers(n_a)), float(rng.normal())
    policy = params("PolicyLogits", logits)
    reinforce_update(policy, [tr(s, a, g, s, True)], Hyperparameters(alpha=1.0, gamma=1.0))
    step = policy.table[s] - logits[s]
    np.testing.assert_allclose(step, fd_gradient(logits, s, a, g), rtol=1e-5, atol=1e-8)


# -- oracle ------------------------------------------------------------------
def test_value_iteration_gridworld():
    v, q = value_iteration_oracle(gridworld_model(4), 0.99, 1e-10)
    assert v[0] == pytest.approx(0.99 ** 5, abs=1e-9)
    assert q[14, 1] == 1.0
    # closed form gamma^(d-1) over the Manhattan distance d to the goal
    for s in range(15):
        r, c = divmod(s, 4)
        assert v[s] == pytest.approx(0.99 ** (6 - r - c - 1), abs=1e-9)


def test_value_iteration_bandit():
    _, q = value_iteration_oracle(bandit_model((0.2, 0.8)), 1.0)
    np.testing.assert_allclose(q, [[0.2, 0.8]])


def test_q_update_fixed_point_at_oracle():
    _, q_star = value_iteration_oracle(gridworld_model(4), 0.99, 1e-12)
    q = params("QTable", q_star)
    model = gridworld_model(4)
    batch = []
    for s in range(15):
        for a in range(4):
            s2 = int(np.argmax(model.transitions[s, a]))
            batch.append(tr(s, a, float(model.rewards[s, a]), s2, bool(model.done[s, a, s2])))
    deltas = [q_update(q, [t], Hyperparameters(alpha=0.0)).mean_td_error for t in batch]
    assert np.mean(np.abs(deltas)) < 1e-10
