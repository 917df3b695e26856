"""Seeded ring-buffer replay with uniform without-replacement sampling."""
from __future__ import annotations

from typing import Any

import numpy as np


class ReplayBuffer:
    def __init__(self, capacity: int, seed: int = 0):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._data: list[Any] = []
        self._head = 0
        self._rng = np.random.default_rng(np.random.SeedSequence([seed % (1 << 64), 11]))

    def __len__(self) -> int:
        return len(self._data)

    def push(self, transition: Any) -> None:
        if len(self._data) < self.capacity:
            self._data.append(transition)
        else:
            self._data[self._head] = transition  # evict oldest
            self._head = (self._head + 1) % self.capacity

    def sample(self, batch_size: int) -> list[Any]:
        if batch_size > len(self._data):
            raise ValueError("not enough transitions")
        idx = self._rng.choice(len(self._data), size=batch_size, replace=False)
        return [self._data[i] for i in idx]
