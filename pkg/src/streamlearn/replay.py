"""Fixed-capacity replay buffer: circular writes, uniform random reads."""
from __future__ import annotations

import numpy as np


class ReplayBuffer:
    """Ring buffer of training examples.

    Writes overwrite the oldest slot once full; reads sample uniformly with
    replacement over the filled slots.  Examples are tuples of arrays and are
    stored as-is (the caller hands over ownership).
    """

    def __init__(self, capacity: int = 10000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._slots = [None] * capacity
        self.head = 0
        self.fill = 0

    def push(self, example):
        if self.fill and not self._shapes_match(example):
            raise ValueError("example shapes differ from buffer contents")
        self._slots[self.head] = example
        self.head = (self.head + 1) % self.capacity
        self.fill = min(self.fill + 1, self.capacity)

    def _shapes_match(self, example):
        ref = self._slots[(self.head - 1) % self.capacity]
        if len(ref) != len(example):
            return False
        return all(np.shape(a) == np.shape(b) for a, b in zip(ref, example))

    def sample(self, k: int, rng: np.random.Generator):
        """k uniform draws with replacement over the filled slots."""
        if self.fill == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.fill, size=k)
        return [self._slots[i] for i in idx]

    def __len__(self):
        return self.fill
