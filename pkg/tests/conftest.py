from __future__ import annotations

import sys
from pathlib import Path

import pytest

from rlarch.monitoring import MetricLogger
from rlarch.orchestrator import Services, config_from_dict, run_training

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"

sys.path.insert(0, str(Path(__file__).resolve().parent))

ALGO_ENV = {
    "q_learning": "gridworld4",
    "a2c": "gridworld4",
    "reinforce": "bandit",
    "central_marl": "matrix_game",
}


def small_config(algorithm: str, **overrides):
    doc = {"env": ALGO_ENV[algorithm], "algorithm": algorithm,
           "stop": {"max_global_steps": 300}, "eval_episodes": 0}
    doc.update(overrides)
    return config_from_dict(doc)


def logged_run(config, path: Path, run_id: str = "r", **services):
    with MetricLogger(path, run_id) as logger:
        result = run_training(config, Services(run_id, logger, **services))
    return result, path.read_bytes()


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS


# Acceptance outcomes, one line per criterion, echoed at the end of the session.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
