"""Distributed Execution Coordinator: placement and worker-parallel collection.

Every env instance ``i`` owns two random streams, both derived from the run
seed alone: the simulator stream (reset seed ``mix_seed(seed, "env", i)``)
and the action stream (``mix_seed(seed, "act", i)``). Streams follow the
instance wherever it is placed, so the merged output depends on the number
of instances but not on how they are split across workers.

Workers run on a thread pool. Each worker owns its instances exclusively;
the only shared input is a read-only parameter snapshot, and each worker
hands back its batch of transitions as the result of its task.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..agent.agents import Actor
from ..env import VecEnv, make_env
from ..errors import CollectionFailed, InvalidArgument
from ..rng import make_rng, mix_seed, rng_from_state, rng_state
from .strategies import MEDIATED, EnvHandle, EnvSlot, flatten, run_strategy


@dataclass(frozen=True)
class WorkerDescriptor:
    index: int
    env_indices: tuple
    seed: int
    role: str = "collector"
    channel: str = ""

    @property
    def num_envs(self) -> int:
        return len(self.env_indices)


@dataclass(frozen=True)
class PlacementPlan:
    workers: tuple
    num_envs: int
    seed: int
    env: object  # EnvSpec
    coordinator_channel: str = "inproc://coordinator"

    @property
    def counts(self) -> list[int]:
        return [w.num_envs for w in self.workers]

    @property
    def inline(self) -> bool:
        return len(self.workers) == 1


def split_counts(total: int, parts: int) -> list[int]:
    """As even as possible; the remainder goes to the lowest indices."""
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def plan_placement(config) -> PlacementPlan:
    if config.num_workers < 1:
        raise InvalidArgument("num_workers must be >= 1")
    if config.num_envs < config.num_workers:
        raise InvalidArgument("every worker needs at least one env instance")
    workers, start = [], 0
    for w, n in enumerate(split_counts(config.num_envs, config.num_workers)):
        workers.append(WorkerDescriptor(
            index=w,
            env_indices=tuple(range(start, start + n)),
            seed=mix_seed(config.seed, w),
            channel=f"inproc://worker-{w}",
        ))
        start += n
    return PlacementPlan(tuple(workers), config.num_envs, config.seed, config.env)


def env_seed(seed: int, env_index: int) -> int:
    return mix_seed(seed, "env", env_index)


def action_seed(seed: int, env_index: int) -> int:
    return mix_seed(seed, "act", env_index)


class Worker:
    """Collector owning a contiguous slice of env instances."""

    def __init__(self, descriptor: WorkerDescriptor, env_spec, seed: int, reset_params=None):
        self.descriptor = descriptor
        self.reset_params = dict(reset_params or {})
        self.slots = []
        for i in descriptor.env_indices:
            env = make_env(env_spec.id, env_spec.params, env_spec.max_episode_steps)
            obs = env.reset(seed=env_seed(seed, i), params=self.reset_params)
            self.slots.append(EnvSlot(i, env, make_rng(action_seed(seed, i)), obs))
        # curriculum params are read at every autoreset
        self.venv = VecEnv([s.env for s in self.slots], reset_params=lambda _i: self.reset_params)

    @property
    def index(self) -> int:
        return self.descriptor.index

    def collect(self, actor, steps: int = 0, episodes: int = 0, strategy: str = MEDIATED) -> list:
        """One segment per owned instance, in instance order."""
        segments = []
        for local, slot in enumerate(self.slots):
            sink: list = []
            handle = EnvHandle(slot, lambda joint, _l=local: self.venv.step_one(_l, joint), sink)
            run_strategy(strategy, actor, handle, steps, episodes)
            segments.append(sink)
        return segments

    def state(self) -> list[dict]:
        return [
            {"index": s.index, "env": s.env.snapshot(), "rng": rng_state(s.rng), "obs": list(s.obs)}
            for s in self.slots
        ]

    def load_state(self, states: Mapping[int, dict]) -> None:
        for s in self.slots:
            st = states[s.index]
            s.env.restore(st["env"])
            s.rng = rng_from_state(st["rng"])
            s.obs = tuple(int(o) for o in st["obs"])


def spawn_workers(plan: PlacementPlan, reset_params=None) -> list[Worker]:
    return [Worker(d, plan.env, plan.seed, reset_params) for d in plan.workers]


class CollectionPool:
    """Runs one collection round across workers and merges in worker order."""

    def __init__(self, workers: Sequence[Worker], parallel: bool | None = None):
        self.workers = list(workers)
        parallel = len(self.workers) > 1 if parallel is None else parallel
        self._executor = ThreadPoolExecutor(max_workers=len(self.workers)) if parallel else None

    def collect_segments(self, actor, steps: int = 0, episodes: int = 0,
                         strategy: str = MEDIATED) -> list:
        if self._executor is None:
            results = []
            for w in self.workers:
                try:
                    results.append(w.collect(actor, steps, episodes, strategy))
                except Exception as exc:
                    raise CollectionFailed(w.index, exc) from exc
        else:
            futures = [self._executor.submit(w.collect, actor, steps, episodes, strategy)
                       for w in self.workers]
            results = []
            failure = None
            for w, fut in zip(self.workers, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    failure = failure or CollectionFailed(w.index, exc)
            if failure is not None:
                raise failure
        return [seg for per_worker in results for seg in per_worker]

    def set_reset_params(self, params) -> None:
        for w in self.workers:
            w.reset_params = dict(params or {})

    def state(self) -> list[dict]:
        return sorted((s for w in self.workers for s in w.state()), key=lambda s: s["index"])

    def load_state(self, states: Sequence[dict]) -> None:
        by_index = {int(s["index"]): s for s in states}
        for w in self.workers:
            w.load_state(by_index)

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def frozen_snapshot(policies: Mapping[str, object]) -> dict:
    """Deep copies, preserving sharing: agents on one policy get one copy."""
    copies: dict = {}
    return {ag: copies.setdefault(id(p), p.copy()) for ag, p in policies.items()}


def collect_parallel(plan: PlacementPlan, snapshot, steps_per_worker: int, *,
                     workers: Sequence[Worker] | None = None, strategy: str = MEDIATED,
                     epsilon: float = 0.0, mode: str = "explore", sequential: bool = False) -> list:
    """Step every instance ``steps_per_worker`` times with a frozen snapshot.

    ``snapshot`` is an :class:`Actor` or a mapping agent id -> params. Without
    ``workers`` fresh workers are spawned from ``plan``. The merged stream is
    worker order, then instance order, then step order.
    """
    if steps_per_worker < 0:
        raise InvalidArgument("steps_per_worker must be >= 0")
    if steps_per_worker == 0:
        return []
    actor = snapshot if isinstance(snapshot, Actor) else Actor(frozen_snapshot(snapshot), mode, epsilon)
    workers = list(workers) if workers is not None else spawn_workers(plan)
    pool = CollectionPool(workers, parallel=not sequential and len(workers) > 1)
    with pool:
        return flatten(pool.collect_segments(actor, steps=steps_per_worker, strategy=strategy))
