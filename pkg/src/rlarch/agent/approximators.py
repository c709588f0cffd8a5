"""Tabular function approximators: policy logits, Q-table, V-table."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument, UnsupportedApproximator

POLICY_LOGITS = "PolicyLogits"
Q_TABLE = "QTable"
V_TABLE = "VTable"
KINDS = (POLICY_LOGITS, Q_TABLE, V_TABLE)


@dataclass(eq=False)
class TabularParams:
    kind: str
    table: np.ndarray

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown approximator kind {self.kind!r}")
        self.table = np.array(self.table, dtype=np.float64)
        if self.table.ndim != 2:
            raise InvalidArgument("table must be two-dimensional")
        if self.kind == V_TABLE and self.table.shape[1] != 1:
            raise InvalidArgument("VTable must be shaped states x 1")
        if not np.all(np.isfinite(self.table)):
            raise InvalidArgument("table entries must be finite")

    @classmethod
    def zeros(cls, kind: str, num_states: int, num_actions: int = 1) -> "TabularParams":
        cols = 1 if kind == V_TABLE else num_actions
        return cls(kind, np.zeros((num_states, cols)))

    @property
    def num_states(self) -> int:
        return self.table.shape[0]

    @property
    def num_actions(self) -> int:
        return self.table.shape[1]

    def copy(self) -> "TabularParams":
        return TabularParams(self.kind, self.table.copy())

    def __eq__(self, other):
        if not isinstance(other, TabularParams):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.table, other.table)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "table": self.table.tolist()}

    @classmethod
    def from_dict(cls, d) -> "TabularParams":
        return cls(d["kind"], np.asarray(d["table"], dtype=np.float64))


def softmax(row) -> np.ndarray:
    row = np.asarray(row, dtype=np.float64)
    z = np.exp(row - row.max())
    return z / z.sum()


def _softmax_list(vals: list) -> list:
    m = max(vals)
    exps = [math.exp(v - m) for v in vals]
    s = sum(exps)
    return [e / s for e in exps]


def _argmax(vals: list) -> int:
    # First maximum wins: ties go to the lowest action id.
    best, best_v = 0, vals[0]
    for i in range(1, len(vals)):
        if vals[i] > best_v:
            best, best_v = i, vals[i]
    return best


def _check_obs(params: TabularParams, obs) -> int:
    s = int(obs)
    if s != obs or not 0 <= s < params.num_states:
        raise InvalidArgument(f"observation {obs!r} outside table with {params.num_states} states")
    return s


def select_action(params: TabularParams, obs: int, rng: np.random.Generator,
                  mode: str = "explore", epsilon: float = 0.0) -> int:
    """Choose an action from ``params`` at state ``obs``.

    Policy logits sample from the softmax in explore mode (one uniform draw,
    inverse CDF) and take the argmax in exploit mode. Q-tables are
    epsilon-greedy in explore mode: one uniform draw decides, and a second
    draw picks the random action. Exploit mode draws nothing.
    """
    if params.kind == V_TABLE:
        raise UnsupportedApproximator("a V-table cannot select actions")
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidArgument(f"epsilon must lie in [0, 1], got {epsilon}")
    if mode not in ("explore", "exploit"):
        raise InvalidArgument(f"unknown mode {mode!r}")
    vals = params.table[_check_obs(params, obs)].tolist()
    if mode == "exploit":
        return _argmax(vals)
    if params.kind == POLICY_LOGITS:
        probs = _softmax_list(vals)
        u = rng.random()
        acc = 0.0
        for a, p in enumerate(probs):
            acc += p
            if u < acc:
                return a
        return len(probs) - 1
    if rng.random() < epsilon:
        return int(rng.integers(len(vals)))
    return _argmax(vals)


def evaluate(params: TabularParams, obs: int) -> np.ndarray:
    """Softmax probabilities, Q-row, or the single V(s) entry."""
    row = params.table[_check_obs(params, obs)]
    if params.kind == POLICY_LOGITS:
        return softmax(row)
    return row.copy()
