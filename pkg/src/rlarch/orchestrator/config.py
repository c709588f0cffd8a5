"""Configuration Manager: load, validate and default-fill experiment configs.

Documents are JSON with strict keys. ``docs/config.md`` lists every field and
its default; the defaults live in this module and nowhere else.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from ..core import Hyperparameters
from ..env import make_env
from ..errors import ConfigInvalid, ConfigSyntaxError, InvalidArgument, RLArchError

ALGORITHMS = ("reinforce", "q_learning", "a2c", "central_marl")
LIFECYCLES = ("mediated", "delegated")
BUFFER_KINDS = ("rollout", "replay", "per_agent_rollout")
REQUIRED_BUFFER = {
    "reinforce": "rollout",
    "a2c": "rollout",
    "q_learning": "replay",
    "central_marl": "per_agent_rollout",
}
# Ring buffer size and minibatch for replay; rollout length for a2c.
DEFAULT_BUFFER = {
    "q_learning": {"kind": "replay", "capacity": 10000, "batch_size": 32},
    "reinforce": {"kind": "rollout", "capacity": None, "batch_size": None},
    "a2c": {"kind": "rollout", "capacity": None, "batch_size": 8},
    "central_marl": {"kind": "per_agent_rollout", "capacity": None, "batch_size": None},
}
# Acting table used for single-agent algorithms (policy id of agent_0).
SINGLE_AGENT_POLICY = {"reinforce": "policy", "q_learning": "q", "a2c": "actor"}

DEFAULT_MAX_EPISODE_STEPS = 100
DEFAULT_EVAL_EPISODES = 10
DEFAULT_WINDOW = 100

# Fields left out of the config digest: budgets and execution bookkeeping that
# do not change what a given training step computes.
DIGEST_EXCLUDED = ("stop", "eval_episodes", "checkpoint_interval_steps",
                   "transfer_init", "num_workers", "lifecycle")

TOP_KEYS = {
    "env", "algorithm", "hyperparameters", "lifecycle", "stop", "seed", "num_workers",
    "num_envs", "buffer", "checkpoint_interval_steps", "transfer_init", "policy_mapping",
    "curriculum", "eval_episodes",
}


@dataclass(frozen=True)
class StoppingCriteria:
    max_global_steps: int | None = None
    max_episodes: int | None = None
    reward_threshold: float | None = None
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        if self.max_global_steps is None and self.max_episodes is None:
            raise InvalidArgument("at least one of max_global_steps / max_episodes must be set")


@dataclass(frozen=True)
class BufferSpec:
    kind: str
    capacity: int | None = None
    batch_size: int | None = None


@dataclass(frozen=True)
class EnvSpec:
    id: str
    params: Mapping[str, Any] = field(default_factory=dict)
    max_episode_steps: int = DEFAULT_MAX_EPISODE_STEPS


@dataclass(frozen=True)
class CurriculumStage:
    threshold: float
    params: Mapping[str, Any]


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvSpec
    algorithm: str
    stop: StoppingCriteria
    hyperparameters: Hyperparameters = field(default_factory=Hyperparameters)
    lifecycle: str = "mediated"
    seed: int = 0
    num_workers: int = 1
    num_envs: int = 1
    buffer: BufferSpec | None = None
    checkpoint_interval_steps: int = 0
    transfer_init: str | None = None
    policy_mapping: Mapping[str, str] | None = None
    curriculum: tuple | None = None
    eval_episodes: int = DEFAULT_EVAL_EPISODES

    @property
    def env_id(self) -> str:
        return self.env.id

    def to_dict(self) -> dict:
        d = asdict(self)
        d["env"] = {"id": self.env.id, "params": _plain(self.env.params),
                    "max_episode_steps": self.env.max_episode_steps}
        d["policy_mapping"] = dict(self.policy_mapping) if self.policy_mapping is not None else None
        if self.curriculum is not None:
            d["curriculum"] = [{"threshold": s.threshold, "params": _plain(s.params)} for s in self.curriculum]
        return d

    def digest(self) -> str:
        d = self.to_dict()
        for k in DIGEST_EXCLUDED:
            d.pop(k, None)
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def with_updates(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


def _plain(obj):
    if isinstance(obj, Mapping):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# parsing and validation
# ---------------------------------------------------------------------------
def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigInvalid(k, "duplicate key")
        out[k] = v
    return out


def parse_document(text: str) -> dict:
    try:
        doc = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ConfigInvalid("<root>", "document must be a JSON object")
    return doc


def _strict(section: Mapping, allowed, path: str) -> None:
    for k in section:
        if k not in allowed:
            where = f"{path}.{k}" if path else k
            raise ConfigInvalid(where, "unknown key")


def _section(doc: Mapping, key: str, path: str) -> dict:
    val = doc.get(key)
    if val is None:
        return {}
    if not isinstance(val, dict):
        raise ConfigInvalid(f"{path}{key}", "must be an object")
    return val


def _int(val, path, minimum=None, allow_none=False):
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)) or int(val) != val:
        raise ConfigInvalid(path, f"must be an integer, got {val!r}")
    val = int(val)
    if minimum is not None and val < minimum:
        raise ConfigInvalid(path, f"must be >= {minimum}, got {val}")
    return val


def _num(val, path, allow_none=False):
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigInvalid(path, f"must be a number, got {val!r}")
    return float(val)


def _choice(val, options, path):
    if val not in options:
        raise ConfigInvalid(path, f"must be one of {list(options)}, got {val!r}")
    return val


def load_config(text: str, base_dir: str | Path | None = None) -> ExperimentConfig:
    """Parse and validate a configuration document (JSON text)."""
    return config_from_dict(parse_document(text), base_dir=base_dir)


def load_config_file(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return load_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def config_from_dict(doc: Mapping[str, Any], base_dir: str | Path | None = None) -> ExperimentConfig:
    _strict(doc, TOP_KEYS, "")
    for required in ("env", "algorithm", "stop"):
        if required not in doc:
            raise ConfigInvalid(required, "required")

    # env
    env_doc = doc["env"]
    if isinstance(env_doc, str):
        env_doc = {"id": env_doc}
    if not isinstance(env_doc, dict):
        raise ConfigInvalid("env", "must be an id string or an object")
    _strict(env_doc, {"id", "params", "max_episode_steps"}, "env")
    if not isinstance(env_doc.get("id"), str):
        raise ConfigInvalid("env.id", "required string")
    env_params = env_doc.get("params") or {}
    if not isinstance(env_params, dict):
        raise ConfigInvalid("env.params", "must be an object")
    max_steps = _int(env_doc.get("max_episode_steps", DEFAULT_MAX_EPISODE_STEPS), "env.max_episode_steps", 1)
    env_spec = EnvSpec(env_doc["id"], dict(env_params), max_steps)
    try:
        probe = make_env(env_spec.id, env_spec.params, env_spec.max_episode_steps)
    except RLArchError as exc:
        raise ConfigInvalid("env", str(exc)) from None

    algorithm = _choice(doc["algorithm"], ALGORITHMS, "algorithm")

    # hyperparameters
    hp_doc = _section(doc, "hyperparameters", "")
    hp_fields = Hyperparameters.__dataclass_fields__
    _strict(hp_doc, hp_fields, "hyperparameters")
    hp_vals = {}
    for k, v in hp_doc.items():
        p = f"hyperparameters.{k}"
        hp_vals[k] = _int(v, p, 1) if k == "epsilon_decay_steps" else _num(v, p)
    try:
        hp = Hyperparameters(**hp_vals)
    except InvalidArgument as exc:
        bad = str(exc).split()[0].rstrip(":")
        raise ConfigInvalid(f"hyperparameters.{bad}", str(exc)) from None

    lifecycle = _choice(doc.get("lifecycle", "mediated"), LIFECYCLES, "lifecycle")

    # stopping criteria
    stop_doc = doc["stop"]
    if not isinstance(stop_doc, dict):
        raise ConfigInvalid("stop", "must be an object")
    _strict(stop_doc, {"max_global_steps", "max_episodes", "reward_threshold", "window"}, "stop")
    max_gs = _int(stop_doc.get("max_global_steps"), "stop.max_global_steps", 0, allow_none=True)
    max_ep = _int(stop_doc.get("max_episodes"), "stop.max_episodes", 0, allow_none=True)
    if max_gs is None and max_ep is None:
        raise ConfigInvalid("stop", "needs max_global_steps or max_episodes")
    stop = StoppingCriteria(
        max_global_steps=max_gs,
        max_episodes=max_ep,
        reward_threshold=_num(stop_doc.get("reward_threshold"), "stop.reward_threshold", allow_none=True),
        window=_int(stop_doc.get("window", DEFAULT_WINDOW), "stop.window", 1),
    )

    seed = _int(doc.get("seed", 0), "seed", 0)
    num_workers = _int(doc.get("num_workers", 1), "num_workers", 1)
    num_envs = _int(doc.get("num_envs", 1), "num_envs", 1)
    if num_envs < num_workers:
        raise ConfigInvalid("num_envs", f"must be >= num_workers ({num_workers})")

    # buffer
    buf_doc = _section(doc, "buffer", "")
    _strict(buf_doc, {"kind", "capacity", "batch_size"}, "buffer")
    merged = {**DEFAULT_BUFFER[algorithm], **buf_doc}
    kind = _choice(merged["kind"], BUFFER_KINDS, "buffer.kind")
    if kind != REQUIRED_BUFFER[algorithm]:
        raise ConfigInvalid("buffer.kind", f"{algorithm} requires a {REQUIRED_BUFFER[algorithm]} buffer, got {kind}")
    capacity = _int(merged.get("capacity"), "buffer.capacity", 1, allow_none=True)
    batch = _int(merged.get("batch_size"), "buffer.batch_size", 1, allow_none=True)
    if kind == "replay" and (capacity is None or batch is None):
        raise ConfigInvalid("buffer", "a replay buffer needs capacity and batch_size")
    if algorithm == "a2c" and batch is None:
        raise ConfigInvalid("buffer.batch_size", "a2c needs a rollout length")
    buffer = BufferSpec(kind, capacity, batch)

    # agents and policy mapping
    agent_ids = probe.agent_ids
    multi = len(agent_ids) > 1
    if multi and algorithm != "central_marl":
        raise ConfigInvalid("algorithm", f"{probe.env_id} has {len(agent_ids)} agents; use central_marl")
    mapping_doc = doc.get("policy_mapping")
    if mapping_doc is not None:
        if not isinstance(mapping_doc, dict) or not all(isinstance(v, str) for v in mapping_doc.values()):
            raise ConfigInvalid("policy_mapping", "must map agent ids to policy id strings")
        unknown = sorted(set(mapping_doc) - set(agent_ids))
        if unknown:
            raise ConfigInvalid(f"policy_mapping.{unknown[0]}", "not an agent of this environment")
        missing = sorted(set(agent_ids) - set(mapping_doc))
        if missing:
            raise ConfigInvalid(f"policy_mapping.{missing[0]}", "agent has no policy (mapping must be total)")
        if algorithm != "central_marl":
            expected = SINGLE_AGENT_POLICY[algorithm]
            if mapping_doc[agent_ids[0]] != expected:
                raise ConfigInvalid(f"policy_mapping.{agent_ids[0]}", f"{algorithm} acts with policy {expected!r}")
        mapping = dict(mapping_doc)
    elif algorithm == "central_marl":
        mapping = {ag: f"pi_{ag}" for ag in agent_ids}
    else:
        mapping = {agent_ids[0]: SINGLE_AGENT_POLICY[algorithm]}

    ckpt = _int(doc.get("checkpoint_interval_steps", 0), "checkpoint_interval_steps", 0)
    transfer = doc.get("transfer_init")
    if transfer is not None and not isinstance(transfer, str):
        raise ConfigInvalid("transfer_init", "must be a checkpoint path or null")
    if transfer is not None and base_dir is not None and not Path(transfer).is_absolute():
        transfer = str(Path(base_dir) / transfer)

    curriculum = _curriculum(doc.get("curriculum"), probe, base_dir)
    eval_episodes = _int(doc.get("eval_episodes", DEFAULT_EVAL_EPISODES), "eval_episodes", 0)

    return ExperimentConfig(
        env=env_spec, algorithm=algorithm, stop=stop, hyperparameters=hp, lifecycle=lifecycle,
        seed=seed, num_workers=num_workers, num_envs=num_envs, buffer=buffer,
        checkpoint_interval_steps=ckpt, transfer_init=transfer, policy_mapping=mapping,
        curriculum=curriculum, eval_episodes=eval_episodes,
    )


def _curriculum(value, probe, base_dir):
    if value is None:
        return None
    if isinstance(value, str):
        path = Path(value)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            value = parse_document_any(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigInvalid("curriculum", f"cannot read schedule {path}: {exc}") from None
    if not isinstance(value, list) or not value:
        raise ConfigInvalid("curriculum", "must be a non-empty list of stages or a path to one")
    stages = []
    prev = None
    for i, st in enumerate(value):
        p = f"curriculum[{i}]"
        if not isinstance(st, dict):
            raise ConfigInvalid(p, "stage must be an object")
        _strict(st, {"threshold", "params"}, p)
        thr = _num(st.get("threshold"), f"{p}.threshold")
        if not 0.0 <= thr <= 1.0:
            raise ConfigInvalid(f"{p}.threshold", "must lie in [0, 1]")
        if i == 0 and thr != 0.0:
            raise ConfigInvalid(f"{p}.threshold", "first stage must start at 0")
        if prev is not None and thr <= prev:
            raise ConfigInvalid(f"{p}.threshold", "thresholds must be strictly increasing")
        params = st.get("params") or {}
        try:
            probe.simulator.resolve_params({**probe.base_params, **params})
        except RLArchError as exc:
            raise ConfigInvalid(f"{p}.params", str(exc)) from None
        stages.append(CurriculumStage(thr, dict(params)))
        prev = thr
    return tuple(stages)


def parse_document_any(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(exc.msg, exc.lineno, exc.colno) from None


def apply_overlay(config: ExperimentConfig, overlay: Mapping[str, Any]) -> ExperimentConfig:
    """Return a re-validated config with dotted-path overrides applied.

    Bare names (``alpha``) address hyperparameters. Changing ``algorithm``
    resets the buffer section to that algorithm's defaults unless the
    overlay sets buffer fields too.
    """
    doc = config.to_dict()
    if "algorithm" in overlay and not any(k.split(".")[0] == "buffer" for k in overlay):
        doc["buffer"] = None
    if "algorithm" in overlay and overlay["algorithm"] != config.algorithm:
        doc["policy_mapping"] = None
    for key, value in overlay.items():
        path = resolve_param_name(key).split(".")
        cur = doc
        for part in path[:-1]:
            if cur.get(part) is None:
                cur[part] = {}
            cur = cur[part]
        cur[path[-1]] = value
    return config_from_dict(doc)


def resolve_param_name(name: str) -> str:
    if "." in name or name in TOP_KEYS:
        return name
    if name in Hyperparameters.__dataclass_fields__:
        return f"hyperparameters.{name}"
    raise ConfigInvalid(name, "not a configuration parameter")


def param_exists(name: str) -> bool:
    try:
        path = resolve_param_name(name).split(".")
    except ConfigInvalid:
        return False
    if path[0] not in TOP_KEYS:
        return False
    if path[0] == "hyperparameters":
        return len(path) == 2 and path[1] in Hyperparameters.__dataclass_fields__
    if path[0] == "buffer":
        return len(path) == 2 and path[1] in {"kind", "capacity", "batch_size"}
    if path[0] == "stop":
        return len(path) == 2 and path[1] in StoppingCriteria.__dataclass_fields__
    if path[0] == "env":
        return len(path) >= 2 and path[1] in {"id", "params", "max_episode_steps"}
    return len(path) == 1 or path[0] == "policy_mapping"
