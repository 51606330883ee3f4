"""Tiny diagnostic environments used by the test and acceptance suites."""

from __future__ import annotations

import numpy as np

from .mdp import ActionVec, Env, StateVec


class TrackingEnv(Env):
    """1-dim tracking task: state x ~ U(-1, 1), reward 1 - (x - a)^2.

    The target resamples every step, so the optimal policy is a = x and the
    optimal return over a 10-step horizon is 10 by construction.
    """

    state_dim = 1
    action_dim = 1
    reward_range = (-3.0, 1.0)

    def _reset_state(self) -> StateVec:
        return self.rng.uniform(-1.0, 1.0, size=1)

    def _step(self, action: ActionVec):
        err = self._state[0] - action[0]
        reward = 1.0 - err * err
        return self.rng.uniform(-1.0, 1.0, size=1), reward, False


class ConstantRewardEnv(Env):
    """Always returns the same reward; state is a fixed zero vector."""

    def __init__(self, reward: float = 1.0, state_dim: int = 2, action_dim: int = 2):
        super().__init__()
        self.reward = reward
        self.state_dim = state_dim
        self.action_dim = action_dim
        lo, hi = min(0.0, reward), max(1.0, reward)
        self.reward_range = (lo, hi)

    def _reset_state(self) -> StateVec:
        return np.zeros(self.state_dim)

    def _step(self, action: ActionVec):
        return np.zeros(self.state_dim), self.reward, False
