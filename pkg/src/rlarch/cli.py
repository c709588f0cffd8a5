"""Command-line entry point.

Exit codes: 0 success, 2 configuration or usage error, 1 runtime failure.
Subcommands are thin adapters over the package API.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .errors import (
    ConfigInvalid,
    ConfigMismatch,
    ConfigSyntaxError,
    InvalidArgument,
    RLArchError,
)
from .experiment import ExperimentSpec, benchmark, run_experiment, tune
from .monitoring import LOG_SUFFIX, MetricLogger, format_summary, learning_curve, read_log, summarize
from .orchestrator.config import config_from_dict, load_config_file, parse_document
from .orchestrator.lifecycle import Services, run_evaluation, run_training
from .persistence import load_checkpoint, read_checkpoint_header

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _default_out() -> Path:
    return Path("runs") / time.strftime("%Y%m%d-%H%M%S")


def _read_config(path: str, seed: int | None = None):
    try:
        config = load_config_file(path)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if seed is not None:
        config = config.with_updates(seed=seed)
    return config


def _read_document(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        raise UsageError(f"config file not found: {path}") from None
    doc = parse_document(text)
    if not isinstance(doc, dict):
        raise UsageError(f"{path}: expected a JSON object")
    return doc


def _base_from(doc: dict, path: str, seed: int | None):
    """A tune/benchmark document's ``base``: an inline config or a path to one."""
    base = doc.get("base")
    root = Path(path).parent
    if isinstance(base, str):
        return _read_config(str(root / base), seed)
    if not isinstance(base, dict):
        raise ConfigInvalid("base", "must be a config object or a path")
    config = config_from_dict(base, base_dir=root)
    return config.with_updates(seed=seed) if seed is not None else config


def _seeds(doc: dict, config, seed: int | None) -> list[int]:
    if seed is not None:
        return [seed]
    seeds = doc.get("seeds", [config.seed])
    if not isinstance(seeds, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds):
        raise ConfigInvalid("seeds", "must be a list of integers")
    return seeds


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.6g}"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def cmd_train(args) -> int:
    config = _read_config(args.config, args.seed)
    out = Path(args.out) if args.out else _default_out()
    label = args.label or Path(args.config).stem
    report = run_experiment(ExperimentSpec(config, label, out, (config.seed,)))
    run = report.runs[0]
    ev = run.final_eval or {}
    print(f"train {run.run_id}: steps={run.global_step} episodes={run.episode_count} "
          f"stop={run.stop_reason} eval_mean={_fmt(ev.get('mean'))}")
    for name in (run.log, run.checkpoint, "manifest.json"):
        print(out / name)
    return EXIT_OK


def cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.checkpoint, "transfer")
    if args.config:
        config = _read_config(args.config, args.seed)
    else:
        full = load_checkpoint(args.checkpoint, "resume")
        config = config_from_dict(full.config)
        if args.seed is not None:
            config = config.with_updates(seed=args.seed)
    episodes = args.episodes if args.episodes is not None else max(config.eval_episodes, 1)
    result = run_evaluation(config, ckpt.tables, episodes)
    print(f"eval {ckpt.run_id}: episodes={result.episodes} mean={result.mean:.6g} "
          f"std={result.std:.6g} min={result.min:.6g} max={result.max:.6g}")
    return EXIT_OK


def cmd_resume(args) -> int:
    config = _read_config(args.config, args.seed)
    header = read_checkpoint_header(args.checkpoint)
    ckpt = load_checkpoint(args.checkpoint, "resume", config)
    run_id = header["run_id"]
    out = Path(args.out) if args.out else Path(args.checkpoint).parent
    out.mkdir(parents=True, exist_ok=True)
    ckpt_path = out / Path(args.checkpoint).name
    with MetricLogger(out / f"{run_id}{LOG_SUFFIX}", run_id, append=True) as logger:
        result = run_training(config, Services(run_id, logger, ckpt_path), resume_from=ckpt)
    ev = result.evaluation
    print(f"resume {run_id}: steps={result.global_step} episodes={result.episode_count} "
          f"stop={result.stop_reason} eval_mean={_fmt(ev.mean if ev else None)}")
    print(out / f"{run_id}{LOG_SUFFIX}")
    print(ckpt_path)
    return EXIT_OK


def cmd_tune(args) -> int:
    doc = _read_document(args.config)
    base = _base_from(doc, args.config, args.seed)
    out = Path(args.out) if args.out else _default_out()
    spec = ExperimentSpec(base, doc.get("label", "tune"), out, _seeds(doc, base, args.seed))
    if "space" not in doc:
        raise ConfigInvalid("space", "required")
    report = tune(spec, doc["space"], doc.get("method", "grid"), doc.get("n"), doc.get("seed", 0))
    for c in report.candidates:
        status = f"failed ({c.cause})" if c.failed else f"objective={c.objective:.6g}"
        print(f"candidate {c.index:03d} {c.overlay}: {status}")
    print(f"best: candidate {report.best.index:03d} {report.best.overlay}")
    print(out / "tune.json")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    doc = _read_document(args.config)
    base = _base_from(doc, args.config, args.seed)
    out = Path(args.out) if args.out else _default_out()
    variants = doc.get("variants")
    if not isinstance(variants, list):
        raise ConfigInvalid("variants", "must be a list of {label, overlay} objects")
    pairs = []
    for i, v in enumerate(variants):
        if not isinstance(v, dict) or not isinstance(v.get("label"), str):
            raise ConfigInvalid(f"variants[{i}]", "needs a label string and an overlay object")
        pairs.append((v["label"], v.get("overlay", {})))
    spec = ExperimentSpec(base, doc.get("label", "benchmark"), out, _seeds(doc, base, args.seed))
    report = benchmark(spec, pairs)
    for v in report.variants:
        print(f"{v.label}: mean={_fmt(v.mean)} std={_fmt(v.std)} n={len(v.returns)}")
    print(out / "benchmark.json")
    return EXIT_OK


def cmd_report(args) -> int:
    records = read_log(args.log)
    if args.curve:
        sys.stdout.write(learning_curve(records, args.curve, args.window).to_csv())
    else:
        sys.stdout.write(format_summary(summarize(records), args.format))
    return EXIT_OK


# ---------------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rlarch", description="Train, evaluate, tune and report "
                                     "tabular reinforcement-learning experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("train", cmd_train, "run training for one config")
    p.add_argument("--config", required=True, help="configuration document (JSON)")
    p.add_argument("--out", help="output directory (default ./runs/<timestamp>)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--label", help="run label (default: config file stem)")

    p = add("eval", cmd_eval, "evaluate a checkpoint greedily")
    p.add_argument("--checkpoint", required=True, help="checkpoint file (.ckpt.json)")
    p.add_argument("--config", help="config to evaluate under (default: the embedded one)")
    p.add_argument("--episodes", type=int, help="number of evaluation episodes")
    p.add_argument("--seed", type=int, help="override the evaluation seed")

    p = add("resume", cmd_resume, "continue a run from its checkpoint")
    p.add_argument("--checkpoint", required=True, help="checkpoint file (.ckpt.json)")
    p.add_argument("--config", required=True, help="config of the run; digest must match")
    p.add_argument("--out", help="output directory (default: the checkpoint's directory)")
    p.add_argument("--seed", type=int, help="override the config seed")

    for name, func, text in (("tune", cmd_tune, "hyperparameter search"),
                             ("benchmark", cmd_benchmark, "compare variants over seeds")):
        p = add(name, func, text)
        p.add_argument("--config", required=True, help=f"{name} document (JSON)")
        p.add_argument("--out", help="output directory (default ./runs/<timestamp>)")
        p.add_argument("--seed", type=int, help="run every candidate with this single seed")

    p = add("report", cmd_report, "summarize a metric log")
    p.add_argument("--log", required=True, help="log file (.log.jsonl)")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.add_argument("--curve", metavar="KEY", help="emit the smoothed learning curve of KEY as CSV")
    p.add_argument("--window", type=int, default=1, help="moving-average window for --curve")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ConfigSyntaxError, ConfigInvalid, ConfigMismatch, InvalidArgument) as exc:
        print(f"rlarch {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RLArchError, OSError) as exc:
        print(f"rlarch {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
