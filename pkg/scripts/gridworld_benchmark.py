"""Benchmark q_learning against a2c on GridWorld-4 over five seeds.

Usage: python scripts/gridworld_benchmark.py [OUT_DIR]
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

from rlarch.experiment import ExperimentSpec, benchmark
from rlarch.orchestrator import config_from_dict

ROOT = Path(__file__).resolve().parents[1]


def main(out: str = "runs/gridworld_benchmark") -> None:
    doc = json.loads((ROOT / "configs" / "benchmark_gridworld.json").read_text())
    spec = ExperimentSpec(config_from_dict(doc["base"]), doc["label"], Path(out), tuple(doc["seeds"]))
    t0 = time.perf_counter()
    report = benchmark(spec, [(v["label"], v["overlay"]) for v in doc["variants"]])
    optimum = 0.99 ** 5
    for v in report.variants:
        print(f"{v.label:12s} mean={v.mean:.6f} std={v.std:.2e} gap={abs(v.mean - optimum):.2e} "
              f"seeds={len(v.returns)}")
    print(f"optimum {optimum:.6f}; {time.perf_counter() - t0:.1f}s; report in {Path(out) / 'benchmark.json'}")


if __name__ == "__main__":
    main(*sys.argv[1:])
