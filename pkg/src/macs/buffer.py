"""Bounded FIFO replay buffer with uniform with-replacement sampling."""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import ConfigError, DimensionError, InsufficientData
from .mdp import Transition


class ReplayBuffer:
    """FIFO transition store; eviction is strictly oldest-first.

    The first pushed transition fixes the state/action dimensions; later
    mismatches are rejected without modifying the buffer.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._data: deque[Transition] = deque(maxlen=capacity)
        self._state_dim: int | None = None
        self._action_dim: int | None = None

    def __len__(self):
        return len(self._data)

    def push(self, transition: Transition) -> None:
        if self._state_dim is None:
            self._state_dim = transition.state.shape[0]
            self._action_dim = transition.action.shape[0]
        elif (
            transition.state.shape[0] != self._state_dim
            or transition.action.shape[0] != self._action_dim
        ):
            raise DimensionError(
                f"transition dims ({transition.state.shape[0]}, {transition.action.shape[0]}) "
                f"do not match buffer dims ({self._state_dim}, {self._action_dim})"
            )
        self._data.append(transition)

    def sample(self, n: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform with replacement; deterministic in the rng state."""
        if n > len(self._data):
            raise InsufficientData(f"requested {n} of {len(self._data)} stored transitions")
        idx = rng.integers(0, len(self._data), size=n)
        return [self._data[i] for i in idx]

    def sample_arrays(self, n: int, rng: np.random.Generator):
        """Sample and stack into (states, actions, rewards, next_states, terminals)."""
        batch = self.sample(n, rng)
        states = np.stack([t.state for t in batch])
        actions = np.stack([t.action for t in batch])
        rewards = np.array([t.reward for t in batch])
        next_states = np.stack([t.next_state for t in batch])
        terminals = np.array([1.0 if t.terminal else 0.0 for t in batch])
        return states, actions, rewards, next_states, terminals
