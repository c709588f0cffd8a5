"""Data persistence: checkpoint save/restore and the curriculum schedule.

Checkpoint files (``*.ckpt.json``) are one canonical JSON document::

    {"header": {"format_version", "config_digest", "run_id",
                "global_step", "episode_count", "algorithm"},
     "state":  {"config", "tables", "buffers", "rng", "envs",
                "counters", "curriculum"}}

Canonical means sorted keys, no insignificant whitespace and floats written
with 17 significant digits, so equal states give equal bytes. The header can
be read on its own via :func:`read_checkpoint_header`.
"""

from __future__ import annotations

import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, BinaryIO, Mapping, Sequence, Union

import numpy as np

from .agent.approximators import TabularParams
from .errors import (
    ConfigMismatch,
    InconsistentState,
    InvalidArgument,
    PersistenceError,
    VersionMismatch,
)

FORMAT_VERSION = 1
CHECKPOINT_SUFFIX = ".ckpt.json"

Sink = Union[str, os.PathLike, BinaryIO]


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------
def format_float(x: float) -> str:
    """17 significant digits; always reads back as a float."""
    if not math.isfinite(x):
        raise ValueError(f"non-finite float {x!r} cannot be serialized")
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def canonical_dumps(obj) -> str:
    parts: list[str] = []
    _emit(obj, parts)
    return "".join(parts)


def _emit(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, Mapping):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"non-string key {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    elif isinstance(obj, TabularParams):
        _emit(obj.to_dict(), out)
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write via a temporary file in the same directory plus ``os.replace``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------
@dataclass
class Checkpoint:
    config_digest: str
    run_id: str = "run"
    algorithm: str = ""
    global_step: int = 0
    episode_count: int = 0
    config: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)  # table name -> TabularParams
    buffers: dict = field(default_factory=dict)
    rng: dict = field(default_factory=dict)
    envs: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    curriculum: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def header(self) -> dict:
        return {
            "format_version": self.format_version,
            "config_digest": self.config_digest,
            "run_id": self.run_id,
            "algorithm": self.algorithm,
            "global_step": self.global_step,
            "episode_count": self.episode_count,
        }

    def to_document(self) -> dict:
        return {
            "header": self.header(),
            "state": {
                "config": self.config,
                "tables": {k: v.to_dict() for k, v in self.tables.items()},
                "buffers": self.buffers,
                "rng": self.rng,
                "envs": self.envs,
                "counters": self.counters,
                "curriculum": self.curriculum,
            },
        }

    def to_bytes(self) -> bytes:
        return canonical_dumps(self.to_document()).encode("utf-8")

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> "Checkpoint":
        try:
            header, state = doc["header"], doc["state"]
            version = header["format_version"]
        except (KeyError, TypeError) as exc:
            raise PersistenceError(f"malformed checkpoint: missing {exc}") from None
        if version != FORMAT_VERSION:
            raise VersionMismatch(f"checkpoint format {version}, expected {FORMAT_VERSION}")
        try:
            return cls(
                config_digest=header["config_digest"],
                run_id=header["run_id"],
                algorithm=header["algorithm"],
                global_step=int(header["global_step"]),
                episode_count=int(header["episode_count"]),
                config=state["config"],
                tables={k: TabularParams.from_dict(v) for k, v in state["tables"].items()},
                buffers=state["buffers"],
                rng=state["rng"],
                envs=state["envs"],
                counters=state["counters"],
                curriculum=state["curriculum"],
                format_version=version,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise PersistenceError(f"malformed checkpoint: {exc!r}") from None


def save_checkpoint(state, sink: Sink) -> None:
    """Serialize ``state`` (a Checkpoint, or an object exposing ``checkpoint()``).

    File sinks are written atomically: a failed write leaves any previous file
    at the target path untouched and no partial file behind.
    """
    if getattr(state, "in_round", False):
        raise InconsistentState("cannot checkpoint while a collection round is in flight")
    ckpt = state if isinstance(state, Checkpoint) else state.checkpoint()
    data = ckpt.to_bytes()
    try:
        if isinstance(sink, (str, os.PathLike)):
            atomic_write_bytes(sink, data)
        else:
            sink.write(data)
            sink.flush()
    except OSError as exc:
        raise PersistenceError(f"checkpoint write failed: {exc}") from exc


def _read_source(source) -> bytes:
    try:
        if isinstance(source, (bytes, bytearray)):
            return bytes(source)
        if isinstance(source, (str, os.PathLike)):
            return Path(source).read_bytes()
        return source.read()
    except OSError as exc:
        raise PersistenceError(f"cannot read checkpoint: {exc}") from exc


def _parse(data: bytes) -> dict:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise PersistenceError(f"corrupt or truncated checkpoint: {exc}") from None
    if not isinstance(doc, dict):
        raise PersistenceError("checkpoint is not a JSON object")
    return doc


def read_checkpoint_header(source) -> dict:
    doc = _parse(_read_source(source))
    header = doc.get("header")
    if not isinstance(header, dict) or "format_version" not in header:
        raise PersistenceError("checkpoint has no header")
    return header


def load_checkpoint(source, mode: str = "resume", config=None) -> Checkpoint:
    """Load a checkpoint.

    ``resume`` restores everything and, when ``config`` is given, requires its
    digest to match. ``transfer`` keeps the approximator tables only: counters
    start at zero and RNG/buffer/env state is dropped so the new run seeds
    itself from its own config.
    """
    if mode not in ("resume", "transfer"):
        raise InvalidArgument(f"unknown load mode {mode!r}")
    ckpt = Checkpoint.from_document(_parse(_read_source(source)))
    if mode == "resume":
        if config is not None and config.digest() != ckpt.config_digest:
            raise ConfigMismatch(
                f"checkpoint digest {ckpt.config_digest[:12]} does not match config {config.digest()[:12]}")
        return ckpt
    return Checkpoint(
        config_digest=ckpt.config_digest,
        run_id=ckpt.run_id,
        algorithm=ckpt.algorithm,
        tables={k: v.copy() for k, v in ckpt.tables.items()},
    )


def checkpoint_path(directory: str | os.PathLike, run_id: str) -> Path:
    return Path(directory) / f"{run_id}{CHECKPOINT_SUFFIX}"


# ---------------------------------------------------------------------------
# curriculum
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CurriculumSchedule:
    """Progress-indexed environment parameters; stage 0 starts at progress 0."""

    stages: tuple  # of (threshold, params)

    def __post_init__(self):
        stages = tuple((float(t), dict(p)) for t, p in self.stages)
        if not stages:
            raise InvalidArgument("a schedule needs at least one stage")
        if stages[0][0] != 0.0:
            raise InvalidArgument("the first stage must start at progress 0")
        for (a, _), (b, _) in zip(stages, stages[1:]):
            if not b > a:
                raise InvalidArgument("stage thresholds must be strictly increasing")
        if stages[-1][0] > 1.0:
            raise InvalidArgument("thresholds must lie in [0, 1]")
        object.__setattr__(self, "stages", stages)

    @classmethod
    def from_config(cls, stages: Sequence) -> "CurriculumSchedule":
        return cls(tuple((s.threshold, s.params) for s in stages))

    def stage_index(self, progress: float) -> int:
        if not 0.0 <= progress <= 1.0:
            raise InvalidArgument(f"progress must lie in [0, 1], got {progress}")
        idx = 0
        for i, (threshold, _) in enumerate(self.stages):
            if threshold <= progress:
                idx = i
        return idx


def schedule_params(schedule: CurriculumSchedule, progress: float) -> dict:
    """Params of the stage with the greatest threshold <= progress."""
    return dict(schedule.stages[schedule.stage_index(progress)][1])


def checkpoint_from_bytes(data: bytes) -> Checkpoint:
    return Checkpoint.from_document(_parse(data))


def checkpoint_roundtrip(ckpt: Checkpoint) -> Checkpoint:
    buf = io.BytesIO()
    save_checkpoint(ckpt, buf)
    return checkpoint_from_bytes(buf.getvalue())
