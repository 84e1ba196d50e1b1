"""Per-configuration experience storage: N ring buffers, one weight split each.

Each buffer owns a lambda value from an evenly spaced grid over the
randomization range and only ever stores transitions generated under it;
the collector rotates the insertion cursor per episode, so trajectories
never straddle buffers.
"""

from __future__ import annotations

import numpy as np


class RingBuffer:
    """Fixed-capacity transition store with uniform sampling."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int, lam: float):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.lam = lam
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.act = np.zeros((capacity, act_dim), dtype=np.float32)
        self.rew = np.zeros(capacity, dtype=np.float32)
        self.obs_next = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.head = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, act, rew: float, obs_next, done: float) -> None:
        i = self.head
        self.obs[i] = obs
        self.act[i] = act
        self.rew[i] = rew
        self.obs_next[i] = obs_next
        self.done[i] = done
        self.head = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch: int):
        """Uniform sample with replacement: (s, a, r, s', d) arrays."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self.size, size=batch)
        return (
            self.obs[idx],
            self.act[idx],
            self.rew[idx],
            self.obs_next[idx],
            self.done[idx],
        )


class MultiBuffer:
    """Round-robin family of ring buffers keyed by weight split."""

    def __init__(
        self,
        n: int,
        capacity: int,
        lam_range: tuple[float, float],
        obs_dim: int = 12,
        act_dim: int = 3,
    ):
        if n <= 0:
            raise ValueError("need at least one buffer")
        lo, hi = lam_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("lambda range must satisfy 0 <= lo <= hi <= 1")
        if n == 1:
            lams = [hi]
        else:
            lams = [lo + (hi - lo) * i / (n - 1) for i in range(n)]
        self.buffers = [
            RingBuffer(capacity, obs_dim, act_dim, lam) for lam in lams
        ]
        self.cursor = 0

    @property
    def lams(self) -> list[float]:
        return [b.lam for b in self.buffers]

    @property
    def current(self) -> RingBuffer:
        """Buffer receiving the episode being collected."""
        return self.buffers[self.cursor]

    def advance(self) -> None:
        """Rotates the insertion cursor; call once per finished episode."""
        self.cursor = (self.cursor + 1) % len(self.buffers)

    def min_size(self) -> int:
        return min(len(b) for b in self.buffers)

    def sample_all(self, rng: np.random.Generator, batch: int):
        """One batch from every buffer, concatenated in buffer order.

        Equal per-buffer batch sizes make the mean over per-buffer losses
        equal to the mean over the concatenated batch, so callers can run
        one stacked pass instead of N.
        """
        parts = [b.sample(rng, batch) for b in self.buffers]
        return tuple(np.concatenate(cols, axis=0) for cols in zip(*parts))
