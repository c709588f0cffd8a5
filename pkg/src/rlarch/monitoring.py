"""Monitoring and visualization: metric logging, reports, rendering, frames.

Log files (``<run_id>.log.jsonl``) hold one JSON object per line with keys
in the fixed order ``run_id, global_step, episode, key, value``; floats use
17 significant digits. A crash can only cut the last line short, so every
prefix that ends in a newline is a valid log.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .env.base import RenderInfo
from .errors import (
    InvalidArgument,
    InvalidFrame,
    InvalidRecord,
    LogError,
    RecorderClosed,
    RenderUnsupported,
    ReportError,
)
from .persistence import format_float

LOG_SUFFIX = ".log.jsonl"
SUMMARY_FIELDS = ("key", "count", "mean", "min", "max", "last")

AGENT_RGB = (255, 0, 0)
GOAL_RGB = (0, 255, 0)
EMPTY_RGB = (255, 255, 255)


# ---------------------------------------------------------------------------
# logging
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class LogRecord:
    run_id: str
    global_step: int
    episode: int | None
    key: str
    value: float

    def __post_init__(self):
        if not isinstance(self.key, str) or not self.key:
            raise InvalidRecord("key must be a non-empty string")
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
            raise InvalidRecord(f"value must be a real number, got {self.value!r}")
        if not math.isfinite(self.value):
            raise InvalidRecord(f"value must be finite, got {self.value!r}")


def format_record(record: LogRecord) -> str:
    episode = "null" if record.episode is None else str(int(record.episode))
    return (f'{{"run_id":{json.dumps(record.run_id)},"global_step":{int(record.global_step)},'
            f'"episode":{episode},"key":{json.dumps(record.key)},'
            f'"value":{format_float(float(record.value))}}}\n')


def parse_record(line: str, lineno: int = 0) -> LogRecord:
    try:
        d = json.loads(line)
        if not isinstance(d, dict) or set(d) != {"run_id", "global_step", "episode", "key", "value"}:
            raise ValueError("wrong keys")
        return LogRecord(d["run_id"], d["global_step"], d["episode"], d["key"], d["value"])
    except (ValueError, TypeError, InvalidRecord) as exc:
        raise ReportError(f"malformed log line: {exc}", lineno) from None


class MetricLogger:
    """Append-only JSON-lines sink for one run."""

    def __init__(self, path: str | os.PathLike, run_id: str, append: bool = False):
        self.path = Path(path)
        self.run_id = run_id
        try:
            self._fh = open(self.path, "ab" if append else "wb")
        except OSError as exc:
            raise LogError(f"cannot open log {self.path}: {exc}") from exc

    def log(self, record: LogRecord) -> None:
        if self._fh is None:
            raise LogError("logger is closed")
        try:
            self._fh.write(format_record(record).encode("utf-8"))
        except OSError as exc:
            raise LogError(f"log write failed: {exc}") from exc

    def log_value(self, global_step: int, episode: int | None, key: str, value: float) -> None:
        self.log(LogRecord(self.run_id, global_step, episode, key, value))

    def flush(self) -> None:
        """Hand buffered lines to the OS; ``close`` additionally syncs to disk."""
        try:
            self._fh.flush()
        except OSError as exc:
            raise LogError(f"log flush failed: {exc}") from exc

    def tell(self) -> int:
        self._fh.flush()
        return self._fh.tell()

    def truncate(self, offset: int) -> None:
        """Drop everything after ``offset`` (used when resuming a run)."""
        self._fh.flush()
        self._fh.truncate(offset)
        self._fh.seek(offset)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def log_record(logger: MetricLogger, record: LogRecord) -> None:
    logger.log(record)


def read_log(source) -> list[LogRecord]:
    """Parse a log from a path or an iterable of lines (e.g. an open file).

    A trailing fragment without a newline is an interrupted write and is
    skipped; any other malformed line raises ``ReportError``.
    """
    if isinstance(source, (str, os.PathLike)):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ReportError(f"cannot read log: {exc}", 0) from exc
    else:
        text = "".join(source)
    # the last piece is either empty or an unterminated fragment
    complete = text.split("\n")[:-1]
    return [parse_record(line, i + 1) for i, line in enumerate(complete) if line.strip()]


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class KeySummary:
    key: str
    count: int
    mean: float
    min: float
    max: float
    last: float


def summarize(records: Iterable[LogRecord]) -> list[KeySummary]:
    """Per-key count/mean/min/max/last, rows sorted by key."""
    groups: dict[str, list[float]] = {}
    for r in records:
        groups.setdefault(r.key, []).append(float(r.value))
    return [
        KeySummary(k, len(v), math.fsum(v) / len(v), min(v), max(v), v[-1])
        for k, v in sorted(groups.items())
    ]


def format_summary(rows: Sequence[KeySummary], fmt: str = "table") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(SUMMARY_FIELDS)
        for r in rows:
            writer.writerow([r.key, r.count, repr(r.mean), repr(r.min), repr(r.max), repr(r.last)])
        return buf.getvalue()
    if fmt != "table":
        raise InvalidArgument(f"unknown report format {fmt!r}")
    cells = [list(SUMMARY_FIELDS)] + [
        [r.key, str(r.count)] + [f"{x:.6g}" for x in (r.mean, r.min, r.max, r.last)] for r in rows
    ]
    widths = [max(len(row[i]) for row in cells) for i in range(len(SUMMARY_FIELDS))]
    lines = []
    for row in cells:
        parts = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(parts).rstrip())
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Series:
    key: str
    steps: tuple
    values: tuple

    def __len__(self) -> int:
        return len(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(("global_step", self.key))
        for s, v in zip(self.steps, self.values):
            writer.writerow((s, repr(v)))
        return buf.getvalue()


def learning_curve(records: Iterable[LogRecord], key: str, window: int = 1) -> Series:
    """Trailing moving average over min(window, points so far) points."""
    if int(window) != window or window < 1:
        raise InvalidArgument("window must be an integer >= 1")
    pts = sorted(((r.global_step, i, float(r.value)) for i, r in enumerate(records) if r.key == key))
    steps, raw = [p[0] for p in pts], [p[2] for p in pts]
    smoothed = []
    for i in range(len(raw)):
        chunk = raw[max(0, i + 1 - window):i + 1]
        smoothed.append(math.fsum(chunk) / len(chunk))
    return Series(key, tuple(steps), tuple(smoothed))


# ---------------------------------------------------------------------------
# rendering and recording
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Frame:
    mode: str
    payload: object  # str for ansi, uint8 array (H, W, 3) for rgb_array

    def __post_init__(self):
        if self.mode == "rgb_array":
            arr = np.asarray(self.payload)
            if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or arr.shape[1] < 1:
                raise InvalidFrame(f"rgb frame must be H x W x 3, got shape {arr.shape}")
            if arr.dtype.kind not in "iu" or arr.min() < 0 or arr.max() > 255:
                raise InvalidFrame("rgb entries must be integers in [0, 255]")
            object.__setattr__(self, "payload", arr.astype(np.uint8))
        elif self.mode == "ansi":
            if not isinstance(self.payload, str):
                raise InvalidFrame("ansi payload must be a string")
        else:
            raise InvalidFrame(f"unknown frame mode {self.mode!r}")

    def __eq__(self, other):
        if not isinstance(other, Frame) or other.mode != self.mode:
            return NotImplemented
        if self.mode == "ansi":
            return self.payload == other.payload
        return np.array_equal(self.payload, other.payload)

    def to_bytes(self) -> bytes:
        return self.payload.encode("utf-8") if self.mode == "ansi" else ppm_bytes(self.payload)


def render(info: RenderInfo, mode: str = "ansi", scale: int = 1) -> Frame:
    if mode not in ("ansi", "rgb_array"):
        raise RenderUnsupported(f"unknown render mode {mode!r}")
    if not info.spatial:
        raise RenderUnsupported(f"scene {info.scene!r} has no spatial layout")
    if int(scale) != scale or scale < 1:
        raise InvalidArgument("scale must be an integer >= 1")
    agents, goals = set(map(tuple, info.agents)), set(map(tuple, info.goals))
    if mode == "ansi":
        rows = []
        for r in range(info.rows):
            rows.append("".join(
                "A" if (r, c) in agents else "G" if (r, c) in goals else "."
                for c in range(info.cols)))
        return Frame("ansi", "".join(row + "\n" for row in rows))
    img = np.empty((info.rows, info.cols, 3), dtype=np.uint8)
    img[:] = EMPTY_RGB
    for r, c in goals:
        img[r, c] = GOAL_RGB
    for r, c in agents:  # agent drawn over goal
        img[r, c] = AGENT_RGB
    if scale > 1:
        img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    return Frame("rgb_array", img)


def ppm_bytes(rgb: np.ndarray) -> bytes:
    arr = np.asarray(rgb, dtype=np.uint8)
    h, w = arr.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + arr.tobytes()


def parse_ppm(data: bytes) -> np.ndarray:
    """Inverse of :func:`ppm_bytes` for the exact header layout it writes."""
    try:
        magic, dims, maxval, body = data.split(b"\n", 3)
        w, h = (int(x) for x in dims.split())
    except ValueError:
        raise InvalidFrame("not a P6 image") from None
    if magic != b"P6" or maxval != b"255" or len(body) != w * h * 3:
        raise InvalidFrame("not a P6 image with maxval 255")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3).copy()


class FrameRecorder:
    """Writes rgb frames as ``frame_%06d.ppm`` in capture order."""

    def __init__(self, directory: str | os.PathLike):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.paths: list[Path] = []
        self._shape = None
        self.closed = False

    def record(self, frame: Frame) -> Path:
        if self.closed:
            raise RecorderClosed("recorder already finalized")
        if frame.mode != "rgb_array":
            raise InvalidFrame("only rgb_array frames can be recorded")
        if self._shape is None:
            self._shape = frame.payload.shape
        elif frame.payload.shape != self._shape:
            raise InvalidFrame(f"frame shape {frame.payload.shape} differs from {self._shape}")
        path = self.directory / f"frame_{len(self.paths):06d}.ppm"
        path.write_bytes(ppm_bytes(frame.payload))
        self.paths.append(path)
        return path

    def finalize(self) -> list[Path]:
        if self.closed:
            raise RecorderClosed("recorder already finalized")
        self.closed = True
        return list(self.paths)


def record_frame(recorder: FrameRecorder, frame: Frame) -> None:
    recorder.record(frame)


def finalize_recording(recorder: FrameRecorder) -> list[Path]:
    return recorder.finalize()


def summary_from_log(path, fmt: str = "table") -> str:
    return format_summary(summarize(read_log(path)), fmt)

