"""Clipped-surrogate policy optimisation over multi-branch discrete actions.

The policy is a swish trunk with one linear softmax head per action
branch; the critic is a separate net of the same shape.  Both are
updated by a single Adam pass over the combined gradient of

    L = -mean(min(ratio * A, clip(ratio) * A))
        + 0.5 * mean((V - returns)^2)
        - beta * mean(entropy)

with advantages from generalised advantage estimation, optionally
normalised over each rollout buffer.  ppo_loss() recomputes the exact
same scalar from parameters alone so gradients can be checked against
finite differences; ppo_grads() is the hand-derived backward pass used
for the actual updates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .configio import ConfigError
from .nn import (
    Adam,
    FeedForward,
    categorical_entropy,
    log_softmax,
    sample_categorical,
    softmax,
)

VALUE_LOSS_COEFF = 0.5


@dataclass
class PpoConfig:
    batch_size: int = 32
    buffer_size: int = 256
    learning_rate: float = 3.0e-4
    entropy_beta: float = 0.005
    clip_epsilon: float = 0.2
    gae_lambda: float = 0.95
    gamma: float = 0.9
    num_epoch: int = 3
    time_horizon: int = 3
    hidden_units: int = 20
    num_layers: int = 3
    normalize_advantages: bool = True

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.buffer_size < self.batch_size:
            raise ConfigError("need buffer_size >= batch_size >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.clip_epsilon <= 0:
            raise ConfigError("clip_epsilon must be > 0")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError("gamma must be in (0, 1]")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ConfigError("gae_lambda must be in [0, 1]")
        if self.num_epoch < 1 or self.time_horizon < 1:
            raise ConfigError("num_epoch and time_horizon must be >= 1")
        if self.hidden_units < 1 or self.num_layers < 1:
            raise ConfigError("hidden_units and num_layers must be >= 1")
        if self.entropy_beta < 0:
            raise ConfigError("entropy_beta must be >= 0")


class PolicyNet:
    """Swish trunk plus an independent linear head per action branch."""

    def __init__(
        self,
        obs_dim: int,
        branch_sizes: Sequence[int],
        hidden_units: int,
        num_layers: int,
        rng: np.random.Generator,
    ):
        self.obs_dim = obs_dim
        self.branch_sizes = list(branch_sizes)
        trunk_sizes = [obs_dim] + [hidden_units] * num_layers
        self.trunk = FeedForward(trunk_sizes, "swish", rng, activate_last=True)
        # small head init keeps the initial policy near uniform
        self.heads = [
            FeedForward([hidden_units, b], "swish", rng, final_scale=0.01) for b in branch_sizes
        ]

    def logits(self, obs: np.ndarray) -> list[np.ndarray]:
        feats = self.trunk.forward(obs)
        return [head.forward(feats) for head in self.heads]

    def logits_cached(self, obs: np.ndarray):
        feats, trunk_cache = self.trunk.forward_cached(obs)
        outs, head_caches = [], []
        for head in self.heads:
            out, cache = head.forward_cached(feats)
            outs.append(out)
            head_caches.append(cache)
        return outs, (trunk_cache, head_caches)

    def backward(self, cache, dlogits: Sequence[np.ndarray]) -> list[np.ndarray]:
        trunk_cache, head_caches = cache
        dfeats = None
        head_grads: list[np.ndarray] = []
        for head, hc, dl in zip(self.heads, head_caches, dlogits):
            grads, dx = head.backward(hc, dl)
            head_grads.extend(grads)
            dfeats = dx if dfeats is None else dfeats + dx
        trunk_grads, _ = self.trunk.backward(trunk_cache, dfeats)
        return trunk_grads + head_grads

    def parameters(self) -> list[np.ndarray]:
        params = self.trunk.parameters()
        for head in self.heads:
            params.extend(head.parameters())
        return params


class ValueNet:
    def __init__(self, obs_dim: int, hidden_units: int, num_layers: int, rng: np.random.Generator):
        self.obs_dim = obs_dim
        sizes = [obs_dim] + [hidden_units] * num_layers + [1]
        self.net = FeedForward(sizes, "swish", rng)

    def values(self, obs: np.ndarray) -> np.ndarray:
        return self.net.forward(obs)[:, 0]

    def values_cached(self, obs: np.ndarray):
        out, cache = self.net.forward_cached(obs)
        return out[:, 0], cache

    def backward(self, cache, dvalues: np.ndarray) -> list[np.ndarray]:
        grads, _ = self.net.backward(cache, dvalues[:, None])
        return grads

    def parameters(self) -> list[np.ndarray]:
        return self.net.parameters()


def joint_log_prob(logits: Sequence[np.ndarray], actions: np.ndarray) -> np.ndarray:
    """Sum of per-branch log-probs for actions of shape (m, n_branches)."""
    rows = np.arange(actions.shape[0])
    total = np.zeros(actions.shape[0])
    for b, lg in enumerate(logits):
        total += log_softmax(lg)[rows, actions[:, b]]
    return total


def sample_actions(
    policy: PolicyNet, value: ValueNet, obs: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stochastic actions, their joint log-probs, and state values."""
    logits = policy.logits(obs)
    actions = np.stack(
        [sample_categorical(rng, softmax(lg)) for lg in logits], axis=1
    ).astype(np.int64)
    return actions, joint_log_prob(logits, actions), value.values(obs)


def greedy_actions(policy: PolicyNet, obs: np.ndarray) -> np.ndarray:
    return np.stack([lg.argmax(axis=-1) for lg in policy.logits(obs)], axis=1)


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    bootstrap_value: float,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Advantages and discounted-return targets for one trajectory segment.

    bootstrap_value is the critic's estimate beyond the last step: zero
    for a terminal state, V(s_T) when the segment was merely truncated.
    Returns targets are advantage + value, the lambda-return.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    T = len(rewards)
    # rewards may be (T,) for one agent or (T, A) for a team; the
    # recursion broadcasts over the trailing axis either way
    advantages = np.zeros_like(values)
    acc = np.zeros(values.shape[1:])
    for t in range(T - 1, -1, -1):
        next_value = values[t + 1] if t + 1 < T else bootstrap_value
        delta = rewards[t] + gamma * next_value - values[t]
        acc = delta + gamma * lam * acc
        advantages[t] = acc
    return advantages, advantages + values


@dataclass
class RolloutBatch:
    """A flat batch of transitions with precomputed GAE targets."""

    obs: np.ndarray
    actions: np.ndarray
    old_log_probs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray

    def __len__(self) -> int:
        return len(self.obs)

    def slice(self, idx: np.ndarray) -> "RolloutBatch":
        return RolloutBatch(
            self.obs[idx],
            self.actions[idx],
            self.old_log_probs[idx],
            self.advantages[idx],
            self.returns[idx],
        )


class RolloutBuffer:
    """Accumulates closed trajectory segments until an update is due."""

    def __init__(self) -> None:
        self._parts: list[RolloutBatch] = []
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def append(self, part: RolloutBatch) -> None:
        self._parts.append(part)
        self._size += len(part)

    def drain(self) -> RolloutBatch:
        merged = RolloutBatch(
            np.concatenate([p.obs for p in self._parts]),
            np.concatenate([p.actions for p in self._parts]),
            np.concatenate([p.old_log_probs for p in self._parts]),
            np.concatenate([p.advantages for p in self._parts]),
            np.concatenate([p.returns for p in self._parts]),
        )
        self._parts.clear()
        self._size = 0
        return merged


def ppo_loss(
    policy: PolicyNet, value: ValueNet, batch: RolloutBatch, config: PpoConfig
) -> tuple[float, dict[str, float]]:
    """Scalar objective on a minibatch, from current parameters only.

    Advantages are used as given (normalisation happens buffer-wide
    before minibatching).  Kept strictly in sync with ppo_grads; the
    tests difference this function to validate those gradients.
    """
    logits = policy.logits(batch.obs)
    log_probs = joint_log_prob(logits, batch.actions)
    ratio = np.exp(log_probs - batch.old_log_probs)
    adv = batch.advantages
    clipped = np.clip(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon)
    surrogate = np.minimum(ratio * adv, clipped * adv)
    policy_loss = -surrogate.mean()
    values = value.values(batch.obs)
    value_loss = VALUE_LOSS_COEFF * np.mean((values - batch.returns) ** 2)
    entropy = sum(categorical_entropy(lg) for lg in logits).mean()
    total = policy_loss + value_loss - config.entropy_beta * entropy
    return float(total), {
        "policy_loss": float(policy_loss),
        "value_loss": float(value_loss),
        "entropy": float(entropy),
    }


def ppo_grads(
    policy: PolicyNet, value: ValueNet, batch: RolloutBatch, config: PpoConfig
) -> tuple[list[np.ndarray], dict[str, float]]:
    """Hand-derived gradient of ppo_loss w.r.t. policy then value params."""
    m = len(batch)
    rows = np.arange(m)
    logits, cache = policy.logits_cached(batch.obs)

    log_prob_parts = [log_softmax(lg) for lg in logits]
    log_probs = np.zeros(m)
    for b in range(len(logits)):
        log_probs += log_prob_parts[b][rows, batch.actions[:, b]]
    ratio = np.exp(log_probs - batch.old_log_probs)
    adv = batch.advantages
    clipped = np.clip(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon)
    unclipped_term = ratio * adv
    surrogate = np.minimum(unclipped_term, clipped * adv)
    # gradient flows through the ratio only where the unclipped term is active
    active = unclipped_term <= clipped * adv
    dlogp = np.where(active, -unclipped_term / m, 0.0)

    dlogits = []
    for b, lg in enumerate(logits):
        probs = np.exp(log_prob_parts[b])
        onehot = np.zeros_like(probs)
        onehot[rows, batch.actions[:, b]] = 1.0
        dl = dlogp[:, None] * (onehot - probs)
        if config.entropy_beta:
            entropy_b = -(probs * log_prob_parts[b]).sum(axis=-1, keepdims=True)
            dl += (config.entropy_beta / m) * probs * (log_prob_parts[b] + entropy_b)
        dlogits.append(dl)
    policy_grads = policy.backward(cache, dlogits)

    values, vcache = value.values_cached(batch.obs)
    dvalues = 2.0 * VALUE_LOSS_COEFF * (values - batch.returns) / m
    value_grads = value.backward(vcache, dvalues)

    entropy = sum(categorical_entropy(lg) for lg in logits).mean()
    stats = {
        "policy_loss": float(-surrogate.mean()),
        "value_loss": float(VALUE_LOSS_COEFF * np.mean((values - batch.returns) ** 2)),
        "entropy": float(entropy),
    }
    return policy_grads + value_grads, stats


@dataclass
class PpoLearner:
    """Policy, critic and their shared optimiser, plus the update loop."""

    policy: PolicyNet
    value: ValueNet
    config: PpoConfig
    optimizer: Adam = field(init=False)

    def __post_init__(self) -> None:
        self.optimizer = Adam(self.parameters())

    def parameters(self) -> list[np.ndarray]:
        return self.policy.parameters() + self.value.parameters()

    def update(
        self, batch: RolloutBatch, lr: float, rng: np.random.Generator
    ) -> dict[str, float]:
        """num_epoch shuffled minibatch passes over one rollout buffer."""
        if self.config.normalize_advantages:
            adv = batch.advantages
            batch = RolloutBatch(
                batch.obs,
                batch.actions,
                batch.old_log_probs,
                (adv - adv.mean()) / (adv.std() + 1e-10),
                batch.returns,
            )
        params = self.parameters()
        stats_acc: dict[str, list[float]] = {}
        for _ in range(self.config.num_epoch):
            order = rng.permutation(len(batch))
            for start in range(0, len(batch), self.config.batch_size):
                idx = order[start : start + self.config.batch_size]
                grads, stats = ppo_grads(self.policy, self.value, batch.slice(idx), self.config)
                self.optimizer.step(params, grads, lr)
                for k, v in stats.items():
                    stats_acc.setdefault(k, []).append(v)
        return {k: float(np.mean(v)) for k, v in stats_acc.items()}
