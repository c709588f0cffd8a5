from __future__ import annotations

import numpy as np
import pytest
from conftest import ALGO_ENV, logged_run, small_config
from hypothesis import given
from hypothesis import strategies as st

from rlarch.agent import Actor, TabularParams, gridworld_model, value_iteration_oracle
from rlarch.env import make_env
from rlarch.errors import ConfigInvalid, ConfigSyntaxError, InvalidArgument, InvalidParams, MissingAgent
from rlarch.orchestrator import (
    DELEGATED,
    MEDIATED,
    PolicyMapping,
    StoppingCriteria,
    apply_overlay,
    assemble_joint_action,
    check_stop,
    collect_parallel,
    config_from_dict,
    load_config,
    plan_placement,
    run_evaluation,
    run_training,
    split_experience,
)
from rlarch.core import RunProgress
from rlarch.env.base import StepResult
from rlarch.rng import mix_seed

ALGOS = list(ALGO_ENV)


# -- configuration -----------------------------------------------------------
def test_minimal_document_gets_defaults():
    cfg = load_config('{"env":"gridworld4","algorithm":"q_learning","stop":{"max_episodes":10000}}')
    hp = cfg.hyperparameters
    assert (hp.gamma, hp.alpha, hp.epsilon_start, hp.epsilon_end, hp.epsilon_decay_steps) == (0.99, 0.1, 1.0, 0.05, 5000)
    assert (cfg.buffer.capacity, cfg.buffer.batch_size, cfg.seed, cfg.num_workers) == (10000, 32, 0, 1)
    assert cfg.lifecycle == MEDIATED


@pytest.mark.parametrize("doc, path", [
    ({"env": "bandit", "algorithm": "reinforce", "stop": {"max_episodes": 1}, "buffer": {"kind": "replay"}},
     "buffer.kind"),
    ({"env": "gridworld4", "algorithm": "q_learning", "stop": {"max_episodes": 1}, "learning_ratee": 0.1},
     "learning_ratee"),
    ({"env": "gridworld4", "algorithm": "q_learning", "stop": {"max_episodes": 1},
      "hyperparameters": {"alpha": -1}}, "hyperparameters.alpha"),
    ({"env": "matrix_game", "algorithm": "reinforce", "stop": {"max_episodes": 1}}, "algorithm"),
    ({"env": "gridworld4", "algorithm": "q_learning", "stop": {}}, "stop"),
    ({"env": "gridworld4", "algorithm": "q_learning", "stop": {"max_episodes": 1},
      "num_workers": 3, "num_envs": 2}, "num_envs"),
])
def test_invalid_documents_name_the_path(doc, path):
    with pytest.raises(ConfigInvalid) as info:
        config_from_dict(doc)
    assert info.value.path == path


def test_syntax_error_reports_position():
    with pytest.raises(ConfigSyntaxError) as info:
        load_config('{"env": "gridworld4",\n  "algorithm": }')
    assert info.value.line == 2


def test_digest_ignores_budget_but_not_alpha():
    a = small_config("q_learning")
    assert a.digest() == small_config("q_learning", stop={"max_episodes": 5}).digest()
    assert a.digest() == small_config("q_learning", num_workers=1, lifecycle="delegated").digest()
    assert a.digest() != small_config("q_learning", hyperparameters={"alpha": 0.2}).digest()


def test_overlay_applies_dotted_and_bare_names():
    cfg = apply_overlay(small_config("q_learning"), {"alpha": 0.3, "stop.max_episodes": 7})
    assert cfg.hyperparameters.alpha == 0.3 and cfg.stop.max_episodes == 7
    switched = apply_overlay(small_config("q_learning"), {"algorithm": "a2c"})
    assert switched.buffer.kind == "rollout" and switched.policy_mapping == {"agent_0": "actor"}


# -- coordination -----------------------------------------------------------
def test_assemble_joint_action_examples():
    mapping = PolicyMapping({"a": "p", "b": "p"})
    assert assemble_joint_action({"b": 1, "a": 0}, mapping, ["a", "b"]) == (0, 1)
    with pytest.raises(MissingAgent) as info:
        assemble_joint_action({"a": 0}, mapping, ["a", "b"])
    assert info.value.agent_id == "b"
    assert assemble_joint_action({"a": 2}, None, ["a"]) == (2,)


@pytest.mark.parametrize("actions, reward", [((0, 0), 1.0), ((1, 0), 0.0)])
def test_split_experience_team_reward(actions, reward):
    env = make_env("matrix_game")
    obs = env.reset(seed=0)
    result = env.step(actions)
    out = split_experience(result, actions, obs, None, env.agent_ids)
    assert [t.reward for t in out.values()] == [reward, reward]
    assert all(t.terminated for t in out.values())


def test_split_experience_needs_every_agent():
    with pytest.raises(InvalidArgument):
        split_experience(StepResult((0,), (1.0,), True, False), (0, 0), (0, 0), None, ["a", "b"])


# -- placement and collection -----------------------------------------------
def test_plan_placement_splits_evenly():
    plan = plan_placement(small_config("q_learning", num_envs=5, num_workers=2))
    assert plan.counts == [3, 2]
    assert [w.env_indices for w in plan.workers] == [(0, 1, 2), (3, 4)]
    assert plan.workers[0].seed == mix_seed(0, 0) != plan.workers[1].seed == mix_seed(0, 1)
    single = plan_placement(small_config("q_learning", num_envs=3))
    assert single.inline and single.counts == [3]


def uniform(env_id):
    env = make_env(env_id)
    return {ag: TabularParams.zeros("PolicyLogits", env.observation_space.size, env.action_space.size)
            for ag in env.agent_ids}


@pytest.mark.parametrize("env_id", ["gridworld4", "bandit", "matrix_game"])
def test_collect_parallel_contracts(env_id):
    algo = next(a for a, e in ALGO_ENV.items() if e == env_id)
    outs = {}
    for workers in (1, 2, 4):
        plan = plan_placement(small_config(algo, num_envs=4, num_workers=workers))
        outs[workers] = collect_parallel(plan, uniform(env_id), 25)
    assert outs[1] == outs[2] == outs[4]
    plan = plan_placement(small_config(algo, num_envs=4, num_workers=2))
    assert collect_parallel(plan, uniform(env_id), 25, sequential=True) == outs[2]
    assert collect_parallel(plan, uniform(env_id), 25) == outs[2]
    assert collect_parallel(plan, uniform(env_id), 0) == []
    assert collect_parallel(plan, uniform(env_id), 25, strategy=DELEGATED) == outs[2]
    assert len(outs[1]) == 4 * 25 * len(make_env(env_id).agent_ids)


# -- stopping ----------------------------------------------------------------
def test_check_stop_examples():
    assert check_stop(StoppingCriteria(max_episodes=100), RunProgress(0, 100), []).reason == "max_episodes"
    crit = StoppingCriteria(max_episodes=10**6, reward_threshold=0.9, window=10)
    assert check_stop(crit, RunProgress(0, 10), [0.95] * 10).reason == "reward_threshold"
    assert not check_stop(crit, RunProgress(0, 5), [0.95] * 5)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 100), st.integers(0, 100))
def test_check_stop_monotone(max_steps, max_eps, step, episode):
    crit = StoppingCriteria(max_global_steps=max_steps, max_episodes=max_eps)
    if check_stop(crit, RunProgress(step, episode), []):
        assert check_stop(crit, RunProgress(step + 1, episode), [])
        assert check_stop(crit, RunProgress(step, episode + 1), [])


# -- training and evaluation ------------------------------------------------
def test_zero_budget_returns_empty_result():
    result = run_training(small_config("q_learning", stop={"max_global_steps": 0}))
    assert (result.global_step, result.episode_count, result.stop_reason) == (0, 0, "max_global_steps")


def test_oracle_policy_evaluates_to_optimum():
    _, q_star = value_iteration_oracle(gridworld_model(4), 0.99)
    res = run_evaluation(small_config("q_learning"), TabularParams("QTable", q_star), 5)
    assert res.mean == pytest.approx(0.99 ** 5, abs=1e-12) and res.std == 0.0


def test_uniform_bandit_explore_evaluation():
    cfg = small_config("reinforce")
    res = run_evaluation(cfg, TabularParams.zeros("PolicyLogits", 1, 2), 100_000, mode="explore")
    assert abs(res.mean - 0.5) < 0.01


def test_evaluation_errors():
    cfg = small_config("q_learning")
    with pytest.raises(InvalidArgument):
        run_evaluation(cfg, TabularParams.zeros("QTable", 16, 4), 0)
    with pytest.raises(InvalidParams):
        run_evaluation(cfg, TabularParams.zeros("QTable", 9, 4), 1)
    with pytest.raises(InvalidParams):
        run_evaluation(cfg, TabularParams.zeros("VTable", 16), 1)


@pytest.mark.parametrize("algorithm", ALGOS)
def test_runs_are_reproducible(tmp_path, algorithm):
    cfg = small_config(algorithm)
    _, a = logged_run(cfg, tmp_path / "a.log.jsonl")
    _, b = logged_run(cfg, tmp_path / "b.log.jsonl")
    assert a == b and a


@pytest.mark.parametrize("algorithm", ALGOS)
def test_strategies_give_identical_logs(tmp_path, algorithm):
    _, a = logged_run(small_config(algorithm, lifecycle=MEDIATED), tmp_path / "m.log.jsonl")
    _, b = logged_run(small_config(algorithm, lifecycle=DELEGATED), tmp_path / "d.log.jsonl")
    assert a == b


@pytest.mark.parametrize("algorithm", ALGOS)
def test_worker_count_invariance(tmp_path, algorithm):
    logs = [logged_run(small_config(algorithm, num_envs=4, num_workers=w), tmp_path / f"w{w}.log.jsonl")[1]
            for w in (1, 2, 4)]
    assert logs[0] == logs[1] == logs[2]


def test_log_record_order_per_episode(tmp_path):
    from rlarch.monitoring import read_log
    logged_run(small_config("q_learning"), tmp_path / "q.log.jsonl")
    keys = [r.key for r in read_log(tmp_path / "q.log.jsonl")]
    assert keys[:4] == ["episode_return", "episode_length", "mean_td_error", "epsilon"]


def test_transfer_init_evaluates_like_source(tmp_path):
    ckpt = tmp_path / "src.ckpt.json"
    src_cfg = small_config("q_learning", stop={"max_global_steps": 2000}, eval_episodes=3)
    from rlarch.orchestrator import Services
    src = run_training(src_cfg, Services("src", checkpoint_path=ckpt))
    dst_cfg = small_config("q_learning", stop={"max_global_steps": 0}, eval_episodes=3,
                           transfer_init=str(ckpt))
    dst = run_training(dst_cfg)
    assert dst.evaluation == src.evaluation
    assert np.array_equal(dst.tables["q"].table, src.tables["q"].table)


def test_shared_policy_mapping_trains_one_table():
    cfg = small_config("central_marl", policy_mapping={"agent_0": "shared", "agent_1": "shared"})
    result = run_training(cfg)
    assert list(result.tables) == ["shared"]


def test_curriculum_run_changes_stage(tmp_path, configs_dir):
    from rlarch.orchestrator import load_config_file
    cfg = load_config_file(configs_dir / "gridworld_curriculum.json").with_updates(
        stop=StoppingCriteria(max_episodes=200), eval_episodes=1)
    result = run_training(cfg)
    assert result.episode_count >= 200 and result.evaluation.mean == pytest.approx(0.99 ** 5)


def test_actor_interact_matches_mediated(tmp_path):
    # the delegated path is Actor.interact; mediated is the manager's loop
    from rlarch.orchestrator.strategies import EnvHandle, EnvSlot, mediated_loop
    from rlarch.rng import make_rng
    outs = []
    for run in ("mediated", "delegated"):
        env = make_env("gridworld4")
        slot = EnvSlot(0, env, make_rng(4), env.reset(seed=0))
        sink: list = []

        def step_fn(joint, env=env):
            r = env.step(joint)
            return r._replace(reset_obs=env.reset()) if r.done else r
        handle = EnvHandle(slot, step_fn, sink)
        actor = Actor(uniform("gridworld4"))
        if run == "mediated":
            mediated_loop(actor, handle, steps=50)
        else:
            actor.interact(handle, steps=50)
        outs.append(sink)
    assert outs[0] == outs[1] and len(outs[0]) == 50
