"""Synthetic recommendation environment with an exact essential/trivial split.

Each episode simulates one user session: a binary static profile, a drifting
unit-norm dynamic interest vector, and a ring of the last ``m`` recommended
item vectors. The click reward is Bernoulli with a logistic probability that
by construction reads only the *essential* coordinates — the first
``essential_static_count`` static dims, all dynamic dims, the most recent
history slot — plus the action. Every other coordinate is reward-trivial,
which makes "replace only the trivial part" exactly measurable.

State layout: ``[static | dynamic | slot0 (most recent) | slot1 | ...]``.

Logit feature blocks, concatenated in this order:

  essential static | dynamic | recent slot | action |
  outer(dynamic, action) | recent slot * action

``click_weights`` is one flat vector over those features, drawn once per
environment from the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .mdp import ActionVec, Env, StateVec

# per-block weight scales (std before the 1/sqrt(block) normalization)
_W_STATIC = 0.4
_W_DYNAMIC = 0.3
_W_RECENT = 0.3
_W_ACTION = 0.8
_W_DYN_ACT = 1.2
_W_REC_ACT = 0.6


@dataclass
class SynthRecConfig:
    n_static: int = 88
    n_dynamic: int = 3
    item_dim: int = 27
    history_len: int = 2
    essential_static_count: int = 40
    drift_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if min(self.n_static, self.n_dynamic, self.item_dim, self.history_len) < 1:
            raise ConfigError("all dimension fields must be >= 1")
        if not 0 <= self.essential_static_count <= self.n_static:
            raise ConfigError(
                f"essential_static_count must be in [0, {self.n_static}], "
                f"got {self.essential_static_count}"
            )
        if self.essential_static_count == self.n_static and self.history_len == 1:
            raise ConfigError("config leaves no trivial state dimension")
        if self.drift_rate < 0:
            raise ConfigError("drift_rate must be >= 0")

    @property
    def state_dim(self) -> int:
        return self.n_static + self.n_dynamic + self.history_len * self.item_dim


class SynthRecEnv(Env):
    """Seeded logistic click simulator satisfying the environment contract."""

    def __init__(self, config: SynthRecConfig):
        super().__init__()
        self.config = config
        self.state_dim = config.state_dim
        self.action_dim = config.item_dim
        self.reward_range = (0.0, 1.0)
        self.click_weights = self._draw_weights(np.random.default_rng(config.seed))

    def _draw_weights(self, rng: np.random.Generator) -> np.ndarray:
        c = self.config
        blocks = [
            (c.essential_static_count, _W_STATIC),
            (c.n_dynamic, _W_DYNAMIC),
            (c.item_dim, _W_RECENT),
            (c.item_dim, _W_ACTION),
            (c.n_dynamic * c.item_dim, _W_DYN_ACT),
            (c.item_dim, _W_REC_ACT),
        ]
        parts = []
        for size, scale in blocks:
            std = scale / np.sqrt(size) if size else 0.0
            parts.append(rng.normal(0.0, std, size=size) if size else np.zeros(0))
        return np.concatenate(parts)

    # -- state slicing --------------------------------------------------------

    def split_state(self, state: StateVec):
        c = self.config
        static = state[: c.n_static]
        dynamic = state[c.n_static : c.n_static + c.n_dynamic]
        slots = [
            state[
                c.n_static + c.n_dynamic + j * c.item_dim :
                c.n_static + c.n_dynamic + (j + 1) * c.item_dim
            ]
            for j in range(c.history_len)
        ]
        return static, dynamic, slots

    @property
    def user_static(self) -> np.ndarray:
        return self.split_state(self.state)[0]

    @property
    def user_dynamic(self) -> np.ndarray:
        return self.split_state(self.state)[1]

    @property
    def history(self) -> list[np.ndarray]:
        return self.split_state(self.state)[2]

    def features(self, state: StateVec, action: ActionVec) -> np.ndarray:
        """The logit feature vector; touches only essential coordinates."""
        c = self.config
        state = np.asarray(state, dtype=np.float64)
        action = np.asarray(action, dtype=np.float64)
        if state.shape != (self.state_dim,):
            raise DimensionError(f"state shape {state.shape}, expected ({self.state_dim},)")
        if action.shape != (self.action_dim,):
            raise DimensionError(f"action shape {action.shape}, expected ({self.action_dim},)")
        static, dynamic, slots = self.split_state(state)
        recent = slots[0]
        return np.concatenate([
            static[: c.essential_static_count],
            dynamic,
            recent,
            action,
            np.outer(dynamic, action).ravel(),
            recent * action,
        ])

    def click_probability(self, state: StateVec, action: ActionVec) -> float:
        """Analytic Bernoulli parameter; invariant to trivial-coordinate changes."""
        logit = float(self.click_weights @ self.features(state, action))
        return 1.0 / (1.0 + np.exp(-logit))

    def ground_truth_masks(self) -> tuple[np.ndarray, np.ndarray]:
        """(essential indices, trivial indices): a partition of 0..state_dim-1.

        Evaluation-only ground truth; agents never see it.
        """
        c = self.config
        ess = list(range(c.essential_static_count))
        ess += list(range(c.n_static, c.n_static + c.n_dynamic))
        base = c.n_static + c.n_dynamic
        ess += list(range(base, base + c.item_dim))
        essential = np.array(sorted(ess), dtype=np.int64)
        trivial = np.setdiff1d(np.arange(self.state_dim), essential)
        return essential, trivial

    # -- environment hooks ------------------------------------------------------

    def _reset_state(self) -> StateVec:
        c = self.config
        static = self.rng.integers(0, 2, size=c.n_static).astype(np.float64)
        dynamic = self.rng.standard_normal(c.n_dynamic)
        dynamic /= np.linalg.norm(dynamic)
        history = np.zeros(c.history_len * c.item_dim)
        return np.concatenate([static, dynamic, history])

    def _step(self, action: ActionVec):
        c = self.config
        p = self.click_probability(self._state, action)
        reward = 1.0 if self.rng.random() < p else 0.0
        static, dynamic, slots = self.split_state(self._state)
        new_slots = [action] + [slots[j] for j in range(c.history_len - 1)]
        drifted = dynamic + c.drift_rate * self.rng.standard_normal(c.n_dynamic)
        norm = np.linalg.norm(drifted)
        if norm < 1e-12:
            drifted = dynamic
        else:
            drifted = drifted / norm
        next_state = np.concatenate([static, drifted] + new_slots)
        return next_state, reward, False


def make_synthrec(config: SynthRecConfig | None = None) -> SynthRecEnv:
    return SynthRecEnv(config or SynthRecConfig())


def click_probability(env: SynthRecEnv, state: StateVec, action: ActionVec) -> float:
    return env.click_probability(state, action)


def ground_truth_masks(env: SynthRecEnv) -> tuple[np.ndarray, np.ndarray]:
    return env.ground_truth_masks()
