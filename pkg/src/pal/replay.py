"""Bounded FIFO experience stores with uniform, combined and prioritized sampling.

Internally a ring: pushes are O(1) even for large capacities, and logical
index 0 is always the oldest item. Priority sampling uses a plain linear
scan instead of a sum tree; buffers here stay small enough for that.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Generic, Iterator, TypeVar

import numpy as np

T = TypeVar("T")


@dataclass(frozen=True)
class SamplingStrategy:
    """How training items are drawn from a buffer."""

    kind: str  # "uniform" | "cer" | "per"
    alpha: float = 0.6

    @classmethod
    def uniform(cls) -> "SamplingStrategy":
        return cls("uniform")

    @classmethod
    def cer(cls) -> "SamplingStrategy":
        return cls("cer")

    @classmethod
    def per(cls, alpha: float = 0.6) -> "SamplingStrategy":
        if alpha < 0:
            raise ValueError(f"alpha must be non-negative, got {alpha}")
        return cls("per", alpha)


class ReplayBuffer(Generic[T]):
    """FIFO store of at most ``capacity`` items, indexed oldest first.

    Priorities are tracked only when ``with_priorities=True``; they stay
    positive and aligned with the items.
    """

    def __init__(self, capacity: int, with_priorities: bool = False):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._ring: list[T] = []
        self._prio: list[float] | None = [] if with_priorities else None
        self._start = 0

    def __len__(self) -> int:
        return len(self._ring)

    def __getitem__(self, index: int) -> T:
        """Logical access: 0 is the oldest item, -1 the newest."""
        n = len(self._ring)
        if index < 0:
            index += n
        if not 0 <= index < n:
            raise IndexError(f"index out of range for {n} items")
        return self._ring[(self._start + index) % self.capacity]

    def __iter__(self) -> Iterator[T]:
        return iter(self.items)

    @property
    def items(self) -> list[T]:
        """Current contents, oldest first (a copy)."""
        return [self[i] for i in range(len(self._ring))]

    @property
    def priorities(self) -> list[float] | None:
        if self._prio is None:
            return None
        n = len(self._ring)
        return [self._prio[(self._start + i) % self.capacity] for i in range(n)]

    @property
    def newest(self) -> T:
        return self[-1]

    @property
    def tracks_priorities(self) -> bool:
        return self._prio is not None

    def push(self, item: T, priority: float | None = None) -> None:
        """Append an item, evicting exactly the oldest once at capacity.

        With priorities enabled and none given, the current maximum
        priority is used (1 on an empty buffer), so fresh items are at
        least as likely to be replayed as anything stored so far.
        """
        if priority is not None and priority <= 0:
            raise ValueError(f"priority must be positive, got {priority}")
        if self._prio is not None and priority is None:
            priority = max(self._prio, default=1.0)
        if priority is not None and self._prio is None:
            raise ValueError("buffer was created without priority tracking")
        if len(self._ring) < self.capacity:
            self._ring.append(item)
            if self._prio is not None:
                self._prio.append(float(priority))
        else:
            self._ring[self._start] = item
            if self._prio is not None:
                self._prio[self._start] = float(priority)
            self._start = (self._start + 1) % self.capacity

    def sample_uniform(self, m: int, rng: np.random.Generator) -> list[T]:
        """Draw ``m`` items independently and uniformly, with replacement."""
        self._check_sample(m)
        idx = rng.integers(0, len(self._ring), size=m)
        return [self[int(i)] for i in idx]

    def sample_cer(self, m: int, rng: np.random.Generator) -> list[T]:
        """Newest item first, then ``m - 1`` uniform draws with replacement."""
        self._check_sample(m)
        out = [self[-1]]
        if m > 1:
            idx = rng.integers(0, len(self._ring), size=m - 1)
            out.extend(self[int(i)] for i in idx)
        return out

    def sample_per(
        self, m: int, rng: np.random.Generator, alpha: float = 0.6
    ) -> list[tuple[T, int]]:
        """Draw ``m`` (item, index) pairs with probability proportional to p_i^alpha."""
        self._check_sample(m)
        if self._prio is None:
            raise ValueError("buffer has no priorities; cannot sample_per")
        weights = np.asarray(self.priorities, dtype=np.float64) ** alpha
        probs = weights / weights.sum()
        idx = rng.choice(len(self._ring), size=m, replace=True, p=probs)
        return [(self[int(i)], int(i)) for i in idx]

    def update_priority(self, index: int, new_priority: float) -> None:
        if self._prio is None:
            raise ValueError("buffer has no priorities")
        if not 0 <= index < len(self._ring):
            raise IndexError(f"index {index} out of range for {len(self._ring)} items")
        if new_priority <= 0:
            raise ValueError(f"priority must be positive, got {new_priority}")
        self._prio[(self._start + index) % self.capacity] = float(new_priority)

    def _check_sample(self, m: int) -> None:
        if not self._ring:
            raise ValueError("cannot sample from an empty buffer")
        if m < 1:
            raise ValueError(f"sample size must be >= 1, got {m}")
