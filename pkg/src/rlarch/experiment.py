"""Experiment orchestration: multi-seed runs, hyperparameter search, benchmarks.

Every run writes into its experiment's output directory::

    <out>/<label>-s<seed>.log.jsonl    metric log
    <out>/<label>-s<seed>.ckpt.json    final checkpoint
    <out>/manifest.json                report manifest (paths relative to <out>)

Tuning puts candidate ``i`` under ``<out>/candidate_<iii>/`` and writes
``<out>/tune.json``; benchmarking puts variant ``i`` under
``<out>/variant_<iii>/`` and writes ``<out>/benchmark.json``.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from .core import Hyperparameters
from .errors import (
    ExperimentAborted,
    InvalidArgument,
    InvalidSpaceForGrid,
    InvalidVariant,
    RLArchError,
    TuneFailed,
)
from .monitoring import LOG_SUFFIX, MetricLogger
from .orchestrator.config import ExperimentConfig, apply_overlay, param_exists
from .orchestrator.lifecycle import Services, run_training
from .persistence import CHECKPOINT_SUFFIX, atomic_write_bytes, canonical_dumps
from .rng import make_rng, mix_seed

MANIFEST_NAME = "manifest.json"
DISTRIBUTIONS = ("uniform", "log-uniform")


def _write_json(path: Path, doc) -> None:
    atomic_write_bytes(path, (canonical_dumps(doc) + "\n").encode("utf-8"))


def sample_std(values: Sequence[float]) -> float:
    """n-1 denominator; 0 for a single value."""
    n = len(values)
    if n < 2:
        return 0.0
    mean = math.fsum(values) / n
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class ExperimentSpec:
    base: ExperimentConfig
    label: str
    out_dir: Path
    seeds: tuple = (0,)

    def __post_init__(self):
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.label or "/" in self.label:
            raise InvalidArgument("label must be a non-empty name without '/'")

    def digest(self) -> str:
        doc = {"base": self.base.to_dict(), "label": self.label, "seeds": list(self.seeds)}
        return hashlib.sha256(canonical_dumps(doc).encode("utf-8")).hexdigest()

    def run_id(self, seed: int) -> str:
        return f"{self.label}-s{seed}"


@dataclass
class RunSummary:
    seed: int
    run_id: str
    log: str
    checkpoint: str
    status: str = "complete"
    global_step: int = 0
    episode_count: int = 0
    stop_reason: str | None = None
    final_eval: dict | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ExperimentReport:
    spec_digest: str
    label: str
    out_dir: Path
    runs: list
    mean: float | None
    std: float | None
    status: str = "complete"

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / MANIFEST_NAME

    @property
    def final_returns(self) -> list[float]:
        return [r.final_eval["mean"] for r in self.runs if r.final_eval is not None]

    def to_manifest(self, base_digest: str, seeds: Sequence[int]) -> dict:
        return {
            "spec_digest": self.spec_digest,
            "config_digest": base_digest,
            "label": self.label,
            "seeds": list(seeds),
            "status": self.status,
            "runs": [r.to_dict() for r in self.runs],
            "aggregate": {"n": len(self.final_returns), "mean": self.mean, "std": self.std},
        }


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Run the base config once per seed and aggregate final evaluations."""
    if not spec.seeds:
        raise InvalidArgument("an experiment needs at least one seed")
    out = spec.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InvalidArgument(f"cannot create output directory {out}: {exc}") from exc
    report = ExperimentReport(spec.digest(), spec.label, out, [], None, None)
    failure = None
    for seed in spec.seeds:
        run_id = spec.run_id(seed)
        summary = RunSummary(seed, run_id, run_id + LOG_SUFFIX, run_id + CHECKPOINT_SUFFIX)
        report.runs.append(summary)
        config = spec.base.with_updates(seed=seed)
        try:
            with MetricLogger(out / summary.log, run_id) as logger:
                result = run_training(config, Services(run_id, logger, out / summary.checkpoint))
        except RLArchError as exc:
            summary.status, summary.error = "failed", f"{type(exc).__name__}: {exc}"
            failure = exc
            break
        summary.global_step = result.global_step
        summary.episode_count = result.episode_count
        summary.stop_reason = result.stop_reason
        if result.evaluation is not None:
            ev = result.evaluation
            summary.final_eval = {"mean": ev.mean, "std": ev.std, "min": ev.min, "max": ev.max,
                                  "episodes": ev.episodes}
    returns = report.final_returns
    if returns:
        report.mean = math.fsum(returns) / len(returns)
        report.std = sample_std(returns)
    if failure is not None:
        report.status = "aborted"
    _write_json(report.manifest_path, report.to_manifest(spec.base.digest(), spec.seeds))
    if failure is not None:
        raise ExperimentAborted(f"run {report.runs[-1].run_id} failed: {failure}", report, failure)
    return report


# ---------------------------------------------------------------------------
# search spaces
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Range:
    low: float
    high: float
    distribution: str = "uniform"

    def __post_init__(self):
        if self.distribution not in DISTRIBUTIONS:
            raise InvalidArgument(f"distribution must be one of {DISTRIBUTIONS}")
        if not self.low < self.high:
            raise InvalidArgument("a range needs low < high")
        if self.distribution == "log-uniform" and self.low <= 0:
            raise InvalidArgument("a log-uniform range needs low > 0")


@dataclass(frozen=True)
class SearchSpace:
    """Parameter name -> list of values (discrete) or :class:`Range`."""

    dims: Mapping[str, Any]

    def __post_init__(self):
        dims = {}
        for name, dom in dict(self.dims).items():
            if isinstance(dom, Mapping):
                dom = Range(float(dom["low"]), float(dom["high"]), dom.get("distribution", "uniform"))
            elif isinstance(dom, Range):
                pass
            else:
                dom = list(dom)
                if not dom:
                    raise InvalidArgument(f"{name}: empty value list")
            dims[name] = dom
        if not dims:
            raise InvalidArgument("search space is empty")
        object.__setattr__(self, "dims", dims)

    @property
    def names(self) -> list[str]:
        return sorted(self.dims)

    def check_names(self) -> None:
        """Every dimension must name a configuration parameter."""
        for name in self.names:
            if not param_exists(name):
                raise InvalidArgument(f"{name!r} is not a configuration parameter")

    def to_dict(self) -> dict:
        return {k: (v.__dict__ if isinstance(v, Range) else v) for k, v in self.dims.items()}


def _space(space) -> SearchSpace:
    return space if isinstance(space, SearchSpace) else SearchSpace(space)


def grid_candidates(space) -> list[dict]:
    """Cartesian product; names sorted, the rightmost name varies fastest."""
    space = _space(space)
    names = space.names
    for n in names:
        if isinstance(space.dims[n], Range):
            raise InvalidSpaceForGrid(f"{n} is a range; grid search needs discrete lists")
    return [dict(zip(names, combo)) for combo in itertools.product(*(space.dims[n] for n in names))]


def random_candidates(space, n: int, seed: int) -> list[dict]:
    """``n`` independent draws; dimensions sampled in sorted-name order."""
    space = _space(space)
    if int(n) != n or n < 1:
        raise InvalidArgument("n must be a positive integer")
    rng = make_rng(mix_seed(seed, "random_search"))
    out = []
    for _ in range(int(n)):
        cand = {}
        for name in space.names:
            dom = space.dims[name]
            if isinstance(dom, Range):
                if dom.distribution == "uniform":
                    cand[name] = float(rng.uniform(dom.low, dom.high))
                else:
                    cand[name] = float(10.0 ** rng.uniform(math.log10(dom.low), math.log10(dom.high)))
            else:
                cand[name] = dom[int(rng.integers(len(dom)))]
        out.append(cand)
    return out


# ---------------------------------------------------------------------------
# tuning
# ---------------------------------------------------------------------------
@dataclass
class CandidateResult:
    index: int
    overlay: dict
    objective: float | None = None
    failed: bool = False
    cause: str | None = None
    out_dir: str = ""


@dataclass
class TuneReport:
    method: str
    budget: int
    seed: int | None
    candidates: list
    best: CandidateResult | None

    def to_dict(self) -> dict:
        return {
            "method": self.method, "budget": self.budget, "seed": self.seed,
            "objective": "mean_final_eval_return",
            "best": None if self.best is None else self.best.index,
            "candidates": [c.__dict__ for c in self.candidates],
        }


def tune(spec: ExperimentSpec, space, method: str = "grid", n: int | None = None,
         seed: int = 0) -> TuneReport:
    """Evaluate candidates and pick the first with the highest objective.

    The objective is the mean final evaluation return over the experiment's seeds.
    A failing candidate is recorded with its cause and skipped.
    """
    space = _space(space)
    space.check_names()
    if method == "grid":
        overlays = grid_candidates(space)
    elif method == "random":
        if n is None:
            raise InvalidArgument("random search needs a candidate budget n")
        overlays = random_candidates(space, n, seed)
    else:
        raise InvalidArgument(f"unknown search method {method!r}")
    results = []
    for i, overlay in enumerate(overlays):
        res = CandidateResult(i, overlay, out_dir=f"candidate_{i:03d}")
        results.append(res)
        try:
            config = apply_overlay(spec.base, overlay)
            sub = ExperimentSpec(config, spec.label, spec.out_dir / res.out_dir, spec.seeds)
            report = run_experiment(sub)
            if report.mean is None:
                raise InvalidArgument("candidate produced no final evaluation (eval_episodes = 0)")
            res.objective = report.mean
        except RLArchError as exc:
            res.failed, res.cause = True, f"{type(exc).__name__}: {exc}"
    ok = [r for r in results if not r.failed]
    if not ok:
        raise TuneFailed({r.index: r.cause for r in results})
    best = ok[0]
    for r in ok[1:]:
        if r.objective > best.objective:
            best = r
    report = TuneReport(method, len(overlays), seed if method == "random" else None, results, best)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(spec.out_dir / "tune.json", report.to_dict())
    return report


# ---------------------------------------------------------------------------
# benchmarking
# ---------------------------------------------------------------------------
# Variants compare learners on one fixed environment; budgets may differ per
# algorithm (a2c needs more episodes than q_learning to converge).
BENCHMARK_SECTIONS = ("algorithm", "hyperparameters", "buffer", "stop")


def check_variant(overlay: Mapping[str, Any]) -> None:
    for key in overlay:
        if key.split(".")[0] in BENCHMARK_SECTIONS or key in Hyperparameters.__dataclass_fields__:
            continue
        raise InvalidVariant(f"variant overlay may only change the algorithm, its "
                             f"hyperparameters, buffer or budget, not {key!r}")


@dataclass
class VariantResult:
    label: str
    returns: list
    mean: float | None
    std: float
    out_dir: str
    logs: list = field(default_factory=list)


@dataclass
class BenchmarkReport:
    base_digest: str
    variants: list

    def to_dict(self) -> dict:
        return {"config_digest": self.base_digest, "variants": [v.__dict__ for v in self.variants]}


def benchmark(spec: ExperimentSpec, variants: Sequence[tuple[str, Mapping[str, Any]]]) -> BenchmarkReport:
    if not variants:
        raise InvalidArgument("benchmark needs at least one variant")
    for _, overlay in variants:
        check_variant(overlay)
    labels = [label for label, _ in variants]
    if len(set(labels)) != len(labels):
        raise InvalidArgument("variant labels must be unique")
    results = []
    for i, (label, overlay) in enumerate(variants):
        config = apply_overlay(spec.base, overlay)
        sub_dir = f"variant_{i:03d}"
        report = run_experiment(ExperimentSpec(config, label, spec.out_dir / sub_dir, spec.seeds))
        returns = report.final_returns
        results.append(VariantResult(
            label, returns, math.fsum(returns) / len(returns) if returns else None,
            sample_std(returns), sub_dir, [f"{sub_dir}/{r.log}" for r in report.runs],
        ))
    out = BenchmarkReport(spec.base.digest(), results)
    _write_json(spec.out_dir / "benchmark.json", out.to_dict())
    return out
