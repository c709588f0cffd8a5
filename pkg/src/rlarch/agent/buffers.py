"""Rollout (consume-then-discard) and replay (bounded FIFO) buffers."""

from __future__ import annotations

import numpy as np

from ..core import Transition
from ..errors import EmptyBuffer, InvalidArgument


class RolloutBuffer:
    def __init__(self):
        self._items: list = []

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition) -> None:
        self._items.append(transition)

    def contents(self) -> list:
        return list(self._items)

    def drain(self) -> list:
        items, self._items = self._items, []
        return items

    def state_dict(self) -> dict:
        return {"kind": "rollout", "items": [list(t) for t in self._items]}

    def load_state_dict(self, d: dict) -> None:
        self._items = [Transition(*t) for t in d["items"]]


class ReplayBuffer:
    """Ring buffer; once full, every push evicts the oldest item.

    Sample indices are logical positions, 0 being the oldest item.
    """

    def __init__(self, capacity: int):
        if int(capacity) != capacity or capacity < 1:
            raise InvalidArgument("capacity must be a positive integer")
        self.capacity = int(capacity)
        self._slots: list = []
        self._head = 0  # physical index of the oldest item once full
        self.insertions = 0

    def __len__(self) -> int:
        return len(self._slots)

    def push(self, transition) -> None:
        if len(self._slots) < self.capacity:
            self._slots.append(transition)
        else:
            self._slots[self._head] = transition
            self._head = (self._head + 1) % self.capacity
        self.insertions += 1

    def contents(self) -> list:
        return self._slots[self._head:] + self._slots[:self._head]

    def sample(self, n: int, rng: np.random.Generator) -> list:
        if not self._slots:
            raise EmptyBuffer("cannot sample from an empty replay buffer")
        if int(n) != n or n < 1:
            raise InvalidArgument("sample size must be a positive integer")
        size, head, slots = len(self._slots), self._head, self._slots
        idx = rng.integers(0, size, size=int(n)).tolist()
        return [slots[(head + i) % size] for i in idx]

    def state_dict(self) -> dict:
        return {
            "kind": "replay",
            "capacity": self.capacity,
            "insertions": self.insertions,
            "items": [list(t) for t in self.contents()],
        }

    def load_state_dict(self, d: dict) -> None:
        self.capacity = int(d["capacity"])
        self._slots = [Transition(*t) for t in d["items"]]
        self._head = 0
        self.insertions = int(d["insertions"])


def buffer_push(buffer, transition) -> None:
    buffer.push(transition)


def buffer_sample(buffer: ReplayBuffer, n: int, rng) -> list:
    return buffer.sample(n, rng)


def buffer_drain(buffer: RolloutBuffer) -> list:
    return buffer.drain()
