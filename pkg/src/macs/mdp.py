"""Core MDP vocabulary: transitions, trajectories, the environment contract.

States and actions are plain float64 numpy vectors. Actions live in the
[-1, 1] box. Environments are fully deterministic given their seed and the
action sequence applied; counterfactual work is done on branches (deep,
independent copies that include the RNG state), never on the original.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ActionBoundsError,
    ConfigError,
    DimensionError,
    InvalidReward,
    MacsError,
    UsageError,
)

StateVec = np.ndarray
ActionVec = np.ndarray


@dataclass
class Transition:
    """One interaction record; the unit stored in replay buffers."""

    state: StateVec
    action: ActionVec
    next_state: StateVec
    reward: float
    terminal: bool = False

    def __post_init__(self):
        self.state = np.asarray(self.state, dtype=np.float64)
        self.action = np.asarray(self.action, dtype=np.float64)
        self.next_state = np.asarray(self.next_state, dtype=np.float64)
        if self.state.shape != self.next_state.shape:
            raise DimensionError(
                f"state dim {self.state.shape} != next_state dim {self.next_state.shape}"
            )
        if not math.isfinite(self.reward):
            raise InvalidReward(f"non-finite reward {self.reward!r}")


@dataclass
class Trajectory:
    """Chained sequence of transitions from one seeded episode."""

    transitions: list[Transition] = field(default_factory=list)
    seed: int = 0

    def __len__(self):
        return len(self.transitions)

    def rewards(self) -> list[float]:
        return [t.reward for t in self.transitions]


class Env:
    """Environment contract: seeded reset, bounded-action step, branching.

    Subclasses set ``state_dim``, ``action_dim`` and ``reward_range`` and
    implement ``_reset_state`` and ``_step``. All randomness must go through
    ``self.rng`` so that ``branch()`` (a deep copy) replays identically.
    """

    state_dim: int
    action_dim: int
    reward_range: tuple[float, float] = (0.0, 1.0)

    def __init__(self):
        self.rng: np.random.Generator | None = None
        self._state: StateVec | None = None

    # -- contract -----------------------------------------------------------

    def reset(self, seed: int) -> StateVec:
        self.rng = np.random.default_rng(seed)
        self._state = np.asarray(self._reset_state(), dtype=np.float64)
        return self._state.copy()

    def step(self, action: ActionVec) -> tuple[StateVec, float, bool]:
        if self._state is None:
            raise UsageError("step before reset")
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.action_dim,):
            raise DimensionError(
                f"action has shape {action.shape}, expected ({self.action_dim},)"
            )
        if np.any(np.abs(action) > 1.0 + 1e-12) or not np.all(np.isfinite(action)):
            raise ActionBoundsError("action element outside [-1, 1]")
        next_state, reward, terminal = self._step(action)
        self._state = np.asarray(next_state, dtype=np.float64)
        return self._state.copy(), float(reward), bool(terminal)

    def branch(self) -> "Env":
        """Deep, independent copy including RNG state."""
        if self._state is None:
            raise UsageError("branch before reset")
        return copy.deepcopy(self)

    def force_state(self, state: StateVec) -> None:
        """Overwrite the current state (the do-operator on states)."""
        if self._state is None:
            raise UsageError("force_state before reset")
        state = np.asarray(state, dtype=np.float64)
        if state.shape != (self.state_dim,):
            raise DimensionError(
                f"state has shape {state.shape}, expected ({self.state_dim},)"
            )
        if not np.all(np.isfinite(state)):
            raise MacsError("non-finite state element")
        self._state = state.copy()
        self._decode_state(self._state)

    def reseed(self, seed: int) -> None:
        """Replace the RNG stream without touching the current state."""
        self.rng = np.random.default_rng(seed)

    @property
    def state(self) -> StateVec:
        if self._state is None:
            raise UsageError("state read before reset")
        return self._state.copy()

    # -- subclass hooks ------------------------------------------------------

    def _reset_state(self) -> StateVec:
        raise NotImplementedError

    def _step(self, action: ActionVec) -> tuple[StateVec, float, bool]:
        raise NotImplementedError

    def _decode_state(self, state: StateVec) -> None:
        """Update any internal fields derived from the state vector."""


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    """Sum of gamma^k * rewards[k]; the first reward is undiscounted."""
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError(f"gamma must be in [0, 1], got {gamma}")
    total = 0.0
    factor = 1.0
    for r in rewards:
        r = float(r)
        if not math.isfinite(r):
            raise InvalidReward(f"non-finite reward {r!r}")
        total += factor * r
        factor *= gamma
    return total


def run_episode(
    env: Env,
    policy: Callable[[StateVec], ActionVec],
    max_steps: int,
    seed: int | None = None,
) -> Trajectory:
    """Roll one episode; truncates at max_steps or on the terminal flag.

    If ``seed`` is given the environment is reset with it; otherwise the
    episode continues from the environment's current state.
    """
    if max_steps < 0:
        raise ConfigError(f"max_steps must be >= 0, got {max_steps}")
    if seed is not None:
        state = env.reset(seed)
    else:
        state = env.state
    traj = Trajectory(seed=seed if seed is not None else -1)
    for _ in range(max_steps):
        action = np.asarray(policy(state), dtype=np.float64)
        next_state, reward, terminal = env.step(action)
        traj.transitions.append(Transition(state, action, next_state, reward, terminal))
        state = next_state
        if terminal:
            break
    return traj
