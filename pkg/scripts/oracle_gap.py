"""Track the max-norm gap between the learned Q-table and the oracle Q* during training.

Trains q_learning on GridWorld-4 in chunks of episodes, resuming from the
previous chunk's checkpoint, and prints the gap after each chunk as CSV.
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

import numpy as np

from rlarch.agent import gridworld_model, value_iteration_oracle
from rlarch.orchestrator import Services, StoppingCriteria, load_config_file, run_training

ROOT = Path(__file__).resolve().parents[1]


def main(chunk: int = 1000, total: int = 10_000) -> None:
    base = load_config_file(ROOT / "configs" / "gridworld_q.json").with_updates(eval_episodes=0)
    _, q_star = value_iteration_oracle(gridworld_model(4), base.hyperparameters.gamma, 1e-10)
    with tempfile.TemporaryDirectory() as tmp:
        ckpt = Path(tmp) / "q.ckpt.json"
        print("episodes,max_abs_gap")
        for done in range(chunk, total + 1, chunk):
            cfg = base.with_updates(stop=StoppingCriteria(max_episodes=done))
            result = run_training(cfg, Services("q", checkpoint_path=ckpt),
                                  resume_from=ckpt if done > chunk else None)
            print(f"{result.episode_count},{np.max(np.abs(result.tables['q'].table - q_star)):.3e}")


if __name__ == "__main__":
    main(*(int(a) for a in sys.argv[1:]))
