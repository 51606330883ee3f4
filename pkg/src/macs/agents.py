"""DDPG, SAC and TD3 behind one agent contract: select_action / observe / update.

All three share the dense-net substrate: a tanh-bounded actor (SAC emits mean
and log-std instead) and identity-output critics on concatenated state-action
input. Updates are minibatch Adam steps with Polyak-averaged targets.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .buffer import ReplayBuffer
from .errors import ConfigError, CorruptCheckpoint
from .mdp import Transition
from .nets import AdamState, DenseNet, adam_step, init_net, load_sections, polyak_update, save_sections

VARIANTS = ("DDPG", "SAC", "TD3")

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class AgentConfig:
    gamma: float = 0.99
    tau: float = 0.005
    batch_size: int = 64
    capacity: int = 100_000
    hidden: int = 128
    sigma_explore: float = 0.1
    sac_alpha: float = 0.2
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    # None resolves per variant: 500 uniform-random warm-up steps for TD3, 0 otherwise
    random_warmup: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in [0, 1], got {self.gamma}")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must be in [0, 1], got {self.tau}")
        if self.batch_size > self.capacity:
            raise ConfigError("batch_size must not exceed buffer capacity")

    def resolved_warmup(self, variant: str) -> int:
        if self.random_warmup is not None:
            return self.random_warmup
        return 500 if variant == "TD3" else 0


class ActorCriticAgent:
    """One actor-critic learner; ``variant`` picks the update rule."""

    def __init__(self, variant: str, state_dim: int, action_dim: int,
                 config: AgentConfig | None = None, seed: int = 0):
        if variant not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        self.variant = variant
        self.state_dim = state_dim
        self.action_dim = action_dim
        self.config = config or AgentConfig()
        h = self.config.hidden
        ss = np.random.SeedSequence(seed)
        seeds = ss.spawn(5)
        if variant == "SAC":
            # identity head emitting action means and log-stds side by side
            self.actor = init_net([state_dim, h, h, 2 * action_dim], "identity", seeds[0])
            self.actor_target = None
        else:
            self.actor = init_net([state_dim, h, h, action_dim], "tanh", seeds[0])
            self.actor_target = self.actor.clone()
        n_critics = 1 if variant == "DDPG" else 2
        self.critics = [
            init_net([state_dim + action_dim, h, h, 1], "identity", seeds[1 + i])
            for i in range(n_critics)
        ]
        self.critic_targets = [c.clone() for c in self.critics]
        self.actor_opt = AdamState.for_params(self.actor.params, lr=self.config.actor_lr)
        self.critic_opts = [
            AdamState.for_params(c.params, lr=self.config.critic_lr) for c in self.critics
        ]
        self.buffer = ReplayBuffer(self.config.capacity)
        self.rng = np.random.default_rng(seeds[4])
        self.update_count = 0
        self.env_steps = 0

    # -- acting ---------------------------------------------------------------

    def _sac_head(self, states: np.ndarray):
        out = self.actor.forward(states)
        mu = out[..., : self.action_dim]
        raw = out[..., self.action_dim :]
        log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
        return mu, log_std, raw

    def select_action(self, state: np.ndarray, explore: bool = False,
                      rng: np.random.Generator | None = None) -> np.ndarray:
        rng = self.rng if rng is None else rng
        if explore and self.env_steps < self.config.resolved_warmup(self.variant):
            return rng.uniform(-1.0, 1.0, self.action_dim)
        if self.variant == "SAC":
            mu, log_std, _ = self._sac_head(np.asarray(state, dtype=np.float64))
            if explore:
                z = mu + np.exp(log_std) * rng.standard_normal(self.action_dim)
                return np.tanh(z)
            return np.tanh(mu)
        action = self.actor.forward(state)
        if explore:
            action = action + rng.normal(0.0, self.config.sigma_explore, self.action_dim)
        return np.clip(action, -1.0, 1.0)

    def policy(self, state: np.ndarray) -> np.ndarray:
        """Deterministic (evaluation) policy."""
        return self.select_action(state, explore=False)

    def observe(self, transition: Transition) -> None:
        self.buffer.push(transition)
        self.env_steps += 1

    # -- targets ----------------------------------------------------------------

    def _q(self, net: DenseNet, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return net.forward(np.concatenate([states, actions], axis=1))[:, 0]

    def compute_targets(self, batch) -> np.ndarray:
        """Critic regression targets y for one stacked batch."""
        states, actions, rewards, next_states, terminals = batch
        cfg = self.config
        mask = cfg.gamma * (1.0 - terminals)
        if self.variant == "DDPG":
            a2 = self.actor_target.forward(next_states)
            return rewards + mask * self._q(self.critic_targets[0], next_states, a2)
        if self.variant == "TD3":
            noise = np.clip(
                self.rng.normal(0.0, cfg.target_noise, size=(len(rewards), self.action_dim)),
                -cfg.noise_clip, cfg.noise_clip,
            )
            a2 = np.clip(self.actor_target.forward(next_states) + noise, -1.0, 1.0)
            q2 = np.minimum(
                self._q(self.critic_targets[0], next_states, a2),
                self._q(self.critic_targets[1], next_states, a2),
            )
            return rewards + mask * q2
        # SAC: clipped double-Q with an entropy term under the current policy
        a2, logp2 = self._sample_squashed(next_states)
        q2 = np.minimum(
            self._q(self.critic_targets[0], next_states, a2),
            self._q(self.critic_targets[1], next_states, a2),
        )
        return rewards + mask * (q2 - cfg.sac_alpha * logp2)

    def _sample_squashed(self, states: np.ndarray):
        """Reparameterized tanh-Gaussian sample and its log-density."""
        mu, log_std, _ = self._sac_head(states)
        eps = self.rng.standard_normal(mu.shape)
        z = mu + np.exp(log_std) * eps
        a = np.tanh(z)
        logp = np.sum(
            -0.5 * eps * eps - log_std - 0.5 * _LOG_2PI - np.log(1.0 - a * a + SQUASH_EPS),
            axis=1,
        )
        return a, logp

    # -- updates ----------------------------------------------------------------

    def _critic_step(self, i: int, states, actions, y) -> float:
        sa = np.concatenate([states, actions], axis=1)
        q = self.critics[i].forward(sa)[:, 0]
        diff = q - y
        loss = float(np.mean(diff * diff))
        grads, _ = self.critics[i].backward(sa, (2.0 * diff / len(diff))[:, None])
        adam_step(self.critics[i].params, grads, self.critic_opts[i])
        return loss

    def _critic_action_grad(self, states, actions, out_grad_per_critic) -> np.ndarray:
        """d(sum of weighted critic outputs)/d(action) without touching params."""
        ga = np.zeros_like(actions)
        sa = np.concatenate([states, actions], axis=1)
        for critic, w in out_grad_per_critic:
            _, gin = critic.backward(sa, w[:, None])
            ga += gin[:, self.state_dim :]
        return ga

    def ddpg_update(self, batch) -> tuple[float, float]:
        if self.variant != "DDPG":
            raise ConfigError(f"ddpg_update on a {self.variant} agent")
        states, actions, rewards, next_states, terminals = batch
        y = self.compute_targets(batch)
        critic_loss = self._critic_step(0, states, actions, y)

        b = len(rewards)
        a_mu = self.actor.forward(states)
        q_mu = self._q(self.critics[0], states, a_mu)
        actor_loss = float(-np.mean(q_mu))
        ga = self._critic_action_grad(states, a_mu, [(self.critics[0], np.full(b, -1.0 / b))])
        agrads, _ = self.actor.backward(states, ga)
        adam_step(self.actor.params, agrads, self.actor_opt)

        tau = self.config.tau
        polyak_update(self.actor_target.params, self.actor.params, tau)
        polyak_update(self.critic_targets[0].params, self.critics[0].params, tau)
        self.update_count += 1
        return critic_loss, actor_loss

    def td3_update(self, batch) -> tuple[float, float | None]:
        if self.variant != "TD3":
            raise ConfigError(f"td3_update on a {self.variant} agent")
        states, actions, rewards, next_states, terminals = batch
        y = self.compute_targets(batch)
        critic_loss = self._critic_step(0, states, actions, y) + self._critic_step(
            1, states, actions, y
        )
        self.update_count += 1
        if self.update_count % self.config.policy_delay != 0:
            return critic_loss, None

        b = len(rewards)
        a_mu = self.actor.forward(states)
        actor_loss = float(-np.mean(self._q(self.critics[0], states, a_mu)))
        ga = self._critic_action_grad(states, a_mu, [(self.critics[0], np.full(b, -1.0 / b))])
        agrads, _ = self.actor.backward(states, ga)
        adam_step(self.actor.params, agrads, self.actor_opt)

        tau = self.config.tau
        polyak_update(self.actor_target.params, self.actor.params, tau)
        for tgt, online in zip(self.critic_targets, self.critics):
            polyak_update(tgt.params, online.params, tau)
        return critic_loss, actor_loss

    def sac_update(self, batch) -> tuple[float, float, float]:
        if self.variant != "SAC":
            raise ConfigError(f"sac_update on a {self.variant} agent")
        states, actions, rewards, next_states, terminals = batch
        alpha = self.config.sac_alpha
        y = self.compute_targets(batch)
        critic_loss = self._critic_step(0, states, actions, y) + self._critic_step(
            1, states, actions, y
        )

        # actor: minimize mean(alpha * log pi(a|s) - min_i Q_i(s, a)), reparameterized
        b = len(rewards)
        mu, log_std, raw = self._sac_head(states)
        std = np.exp(log_std)
        eps = self.rng.standard_normal(mu.shape)
        z = mu + std * eps
        a = np.tanh(z)
        logp = np.sum(
            -0.5 * eps * eps - log_std - 0.5 * _LOG_2PI - np.log(1.0 - a * a + SQUASH_EPS),
            axis=1,
        )
        q1 = self._q(self.critics[0], states, a)
        q2 = self._q(self.critics[1], states, a)
        qmin = np.minimum(q1, q2)
        actor_loss = float(np.mean(alpha * logp - qmin))
        entropy_term = float(np.mean(-logp))

        pick1 = (q1 <= q2).astype(np.float64)
        dq_da = self._critic_action_grad(
            states, a,
            [(self.critics[0], -pick1 / b), (self.critics[1], -(1.0 - pick1) / b)],
        )
        dlogp_da = 2.0 * a / (1.0 - a * a + SQUASH_EPS)
        dl_da = (alpha / b) * dlogp_da + dq_da
        dl_dz = dl_da * (1.0 - a * a)
        dl_dmu = dl_dz
        # log-std enters through z = mu + exp(log_std) * eps and the -log_std density
        # term; the clip to [LOG_STD_MIN, MAX] zeroes the gradient where saturated
        dl_dlogstd = (dl_dz * std * eps - alpha / b) * (
            (raw > LOG_STD_MIN) & (raw < LOG_STD_MAX)
        )
        out_grad = np.concatenate([dl_dmu, dl_dlogstd], axis=1)
        agrads, _ = self.actor.backward(states, out_grad)
        adam_step(self.actor.params, agrads, self.actor_opt)

        tau = self.config.tau
        for tgt, online in zip(self.critic_targets, self.critics):
            polyak_update(tgt.params, online.params, tau)
        self.update_count += 1
        return critic_loss, actor_loss, entropy_term

    def update(self):
        """Sample a minibatch from the agent's buffer and apply one update.

        Returns the variant's loss tuple, or None while the buffer is still
        smaller than the batch size.
        """
        if len(self.buffer) < self.config.batch_size:
            return None
        batch = self.buffer.sample_arrays(self.config.batch_size, self.rng)
        if self.variant == "DDPG":
            return self.ddpg_update(batch)
        if self.variant == "TD3":
            return self.td3_update(batch)
        return self.sac_update(batch)

    # -- checkpointing -----------------------------------------------------------

    def save(self, sink, metadata: dict | None = None) -> None:
        meta = dict(metadata or {})
        meta.update(
            variant=self.variant,
            state_dim=self.state_dim,
            action_dim=self.action_dim,
            agent_config=asdict(self.config),
        )
        sections = {"actor": self.actor}
        if self.actor_target is not None:
            sections["actor_target"] = self.actor_target
        for i, c in enumerate(self.critics):
            sections[f"critic_{i}"] = c
        for i, c in enumerate(self.critic_targets):
            sections[f"critic_target_{i}"] = c
        save_sections(sections, meta, sink)

    @classmethod
    def load(cls, source, seed: int = 0) -> tuple["ActorCriticAgent", dict]:
        """Rebuild an agent from a checkpoint (fresh optimizer and buffer)."""
        sections, meta = load_sections(source)
        try:
            config = AgentConfig(**meta["agent_config"])
            agent = cls(meta["variant"], meta["state_dim"], meta["action_dim"], config, seed)
        except (KeyError, TypeError) as exc:
            raise CorruptCheckpoint(f"missing or invalid agent metadata: {exc}") from exc
        for name, net in sections.items():
            if name == "actor":
                agent.actor = net
            elif name == "actor_target":
                agent.actor_target = net
            elif name.startswith("critic_target_"):
                agent.critic_targets[int(name.rsplit("_", 1)[1])] = net
            elif name.startswith("critic_"):
                agent.critics[int(name.rsplit("_", 1)[1])] = net
            else:
                raise CorruptCheckpoint(f"unexpected checkpoint section {name!r}")
        agent.actor_opt = AdamState.for_params(agent.actor.params, lr=config.actor_lr)
        agent.critic_opts = [
            AdamState.for_params(c.params, lr=config.critic_lr) for c in agent.critics
        ]
        return agent, meta


def squashed_gaussian_logpdf(a: np.ndarray, mu: float, log_std: float) -> np.ndarray:
    """Log-density of tanh(N(mu, exp(log_std)^2)) evaluated at points in (-1, 1)."""
    a = np.asarray(a, dtype=np.float64)
    z = np.arctanh(a)
    std = math.exp(log_std)
    log_gauss = -0.5 * ((z - mu) / std) ** 2 - log_std - 0.5 * _LOG_2PI
    return log_gauss - np.log(1.0 - a * a + SQUASH_EPS)
