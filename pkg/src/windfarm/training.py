"""Experience collection and evaluation around the PPO learner.

One learner is shared by all agents of a team (and by several team
instances when num_parallel_envs > 1; they are stepped round-robin in
one process).  Trajectory segments are cut every time_horizon steps or
at episode end, bootstrapped with the critic, and pushed into a buffer
that triggers an update once it reaches buffer_size transitions.

Step counting follows the convention that one environment transition
contributes one step per agent, so a multi-agent farm consumes its
step budget eight times faster per episode than the single-agent one.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .configio import ConfigError
from .nn import load_arrays, load_sidecar, parameter_hash, save_arrays
from .ppo import (
    PolicyNet,
    PpoConfig,
    PpoLearner,
    RolloutBatch,
    RolloutBuffer,
    ValueNet,
    compute_gae,
    greedy_actions,
    sample_actions,
)

CHECKPOINT_COUNT = 5  # evenly spaced snapshots per training run


@dataclass
class TrainConfig:
    max_steps: int = 2_000_000
    summary_freq: int = 16_000
    num_parallel_envs: int = 1

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ConfigError("max_steps must be >= 1")
        if self.summary_freq < 1:
            raise ConfigError("summary_freq must be >= 1")
        if self.num_parallel_envs < 1:
            raise ConfigError("num_parallel_envs must be >= 1")


@dataclass
class _Segment:
    """Open trajectory fragment for all agents of one team."""

    obs: list[np.ndarray] = field(default_factory=list)
    actions: list[np.ndarray] = field(default_factory=list)
    log_probs: list[np.ndarray] = field(default_factory=list)
    values: list[np.ndarray] = field(default_factory=list)
    rewards: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.obs)

    def close(self, bootstrap: np.ndarray, gamma: float, lam: float) -> RolloutBatch:
        """GAE over the segment, flattened to (T * agents, ...)."""
        rewards = np.stack(self.rewards)  # (T, A)
        values = np.stack(self.values)
        advantages, returns = compute_gae(rewards, values, bootstrap, gamma, lam)
        obs = np.stack(self.obs)  # (T, A, d)
        actions = np.stack(self.actions)  # (T, A, branches)
        batch = RolloutBatch(
            obs.reshape(-1, obs.shape[-1]),
            actions.reshape(-1, actions.shape[-1]),
            np.stack(self.log_probs).reshape(-1),
            advantages.reshape(-1),
            returns.reshape(-1),
        )
        self.obs.clear()
        self.actions.clear()
        self.log_probs.clear()
        self.values.clear()
        self.rewards.clear()
        return batch


@dataclass
class _EpisodeAccumulator:
    efficiency_sum: float = 0.0
    alignment_sum: float = 0.0
    agent_return_sum: float = 0.0
    send_counts: np.ndarray | None = None
    steps: int = 0

    def add(self, result, train_rewards: np.ndarray) -> None:
        self.efficiency_sum += result.efficiency
        self.alignment_sum += result.alignment_mean
        self.agent_return_sum += float(train_rewards.mean())
        if self.send_counts is None:
            self.send_counts = result.sends.astype(np.int64).copy()
        else:
            self.send_counts += result.sends
        self.steps += 1


def episode_reward(efficiency_sum: float, send_counts: np.ndarray, cost_per_send: float, turbine_count: int) -> float:
    """Canonical episode score: summed efficiency minus mean message cost.

    The cost term is count * cost per turbine (one multiply, so a full
    2000-step broadcast comes out as exactly 25.0), averaged over
    turbines to stay on the same scale for every setup.
    """
    total_cost = float(np.sum(send_counts * cost_per_send))
    return efficiency_sum - total_cost / turbine_count


@dataclass
class TrainResult:
    summaries: list[dict]
    episodes: list[dict]
    learner: PpoLearner
    total_steps: int
    wall_seconds: float


def train(
    team_factory,
    ppo_config: PpoConfig,
    train_config: TrainConfig,
    seed: int,
    checkpoint_dir: str | Path | None = None,
    checkpoint_meta: dict | None = None,
) -> TrainResult:
    """Train one policy on teams produced by team_factory(env_rng).

    The seed splits into independent streams for network init, action
    sampling/minibatch shuffling, and each parallel environment, so a
    rerun with the same seed is bit-identical.
    """
    root = np.random.SeedSequence(seed)
    net_ss, sample_ss, *env_ss = root.spawn(2 + train_config.num_parallel_envs)
    net_rng = np.random.default_rng(net_ss)
    sample_rng = np.random.default_rng(sample_ss)
    teams = [team_factory(np.random.default_rng(ss)) for ss in env_ss]
    lead = teams[0]

    policy = PolicyNet(lead.obs_dim, lead.branch_sizes, ppo_config.hidden_units, ppo_config.num_layers, net_rng)
    value = ValueNet(lead.obs_dim, ppo_config.hidden_units, ppo_config.num_layers, net_rng)
    learner = PpoLearner(policy, value, ppo_config)
    buffer = RolloutBuffer()

    observations = [team.reset() for team in teams]
    segments = [_Segment() for _ in teams]
    accumulators = [_EpisodeAccumulator() for _ in teams]

    summaries: list[dict] = []
    episodes: list[dict] = []
    window_rewards: list[float] = []
    window_stats: dict[str, list[float]] = {}
    last_mean_reward = float("nan")
    total_steps = 0
    next_summary = train_config.summary_freq
    update_count = 0
    episode_count = 0
    current_lr = ppo_config.learning_rate
    started = time.monotonic()

    checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    checkpoint_steps = sorted(
        train_config.max_steps * k // CHECKPOINT_COUNT for k in range(1, CHECKPOINT_COUNT)
    )

    def emit_summary(step: int) -> None:
        nonlocal last_mean_reward
        if window_rewards:
            last_mean_reward = float(np.mean(window_rewards))
        row = {
            "step": step,
            "episode_count": episode_count,
            "mean_episode_reward": last_mean_reward,
            "mean_agent_return": float(np.mean(window_stats["agent_return"])) if window_stats.get("agent_return") else float("nan"),
            "mean_agent_sends": float(np.mean(window_stats["sends"])) if window_stats.get("sends") else float("nan"),
            "policy_loss": float(np.mean(window_stats["policy_loss"])) if window_stats.get("policy_loss") else float("nan"),
            "value_loss": float(np.mean(window_stats["value_loss"])) if window_stats.get("value_loss") else float("nan"),
            "entropy": float(np.mean(window_stats["entropy"])) if window_stats.get("entropy") else float("nan"),
            "learning_rate": current_lr,
            "update_count": update_count,
        }
        summaries.append(row)
        window_rewards.clear()
        window_stats.clear()

    while total_steps < train_config.max_steps:
        for idx, team in enumerate(teams):
            if total_steps >= train_config.max_steps:
                break
            obs = observations[idx]
            actions, log_probs, values = sample_actions(policy, value, obs, sample_rng)
            result = team.step(actions)
            train_rewards = result.rewards - result.costs

            seg = segments[idx]
            seg.obs.append(obs)
            seg.actions.append(actions)
            seg.log_probs.append(log_probs)
            seg.values.append(values)
            seg.rewards.append(train_rewards)
            accumulators[idx].add(result, train_rewards)
            total_steps += team.agent_count

            if len(seg) >= ppo_config.time_horizon or result.done:
                if result.done:
                    bootstrap = np.zeros(team.agent_count)
                else:
                    bootstrap = value.values(result.observations)
                buffer.append(seg.close(bootstrap, ppo_config.gamma, ppo_config.gae_lambda))

            if result.done:
                acc = accumulators[idx]
                reward = episode_reward(
                    acc.efficiency_sum, acc.send_counts, team.comm_cost_per_send, team.turbine_count
                )
                episode_count += 1
                episodes.append(
                    {
                        "episode": episode_count,
                        "end_step": total_steps,
                        "reward": reward,
                        "efficiency_sum": acc.efficiency_sum,
                        "mean_agent_return": acc.agent_return_sum,
                        "sends_per_turbine": float(acc.send_counts.mean()),
                        "alignment_mean": acc.alignment_sum / max(acc.steps, 1),
                    }
                )
                window_rewards.append(reward)
                window_stats.setdefault("agent_return", []).append(acc.agent_return_sum)
                window_stats.setdefault("sends", []).append(float(acc.send_counts.mean()))
                accumulators[idx] = _EpisodeAccumulator()
                observations[idx] = team.reset()
            else:
                observations[idx] = result.observations

            if len(buffer) >= ppo_config.buffer_size:
                current_lr = ppo_config.learning_rate * max(0.0, 1.0 - total_steps / train_config.max_steps)
                stats = learner.update(buffer.drain(), current_lr, sample_rng)
                update_count += 1
                for key, val in stats.items():
                    window_stats.setdefault(key, []).append(val)

            while checkpoint_steps and total_steps >= checkpoint_steps[0]:
                due = checkpoint_steps.pop(0)
                if checkpoint_dir is not None:
                    save_policy_value(
                        checkpoint_dir / f"step_{due}.nn", policy, value, checkpoint_meta
                    )

            if total_steps >= next_summary:
                emit_summary(total_steps)
                next_summary += train_config.summary_freq

    if not summaries or summaries[-1]["step"] < total_steps:
        emit_summary(total_steps)
    wall = time.monotonic() - started
    if checkpoint_dir is not None:
        save_policy_value(checkpoint_dir / "final.nn", policy, value, checkpoint_meta)
    return TrainResult(summaries, episodes, learner, total_steps, wall)


@dataclass
class EpisodeRecord:
    episode: int
    env_seed: int
    reward: float
    efficiency_sum: float
    cost_per_turbine: float
    sends_per_turbine: float
    alignment_mean: float


def run_episodes(team, policy: PolicyNet, env_seeds: list[int]) -> list[EpisodeRecord]:
    """Greedy (argmax) rollouts, one per provided environment seed."""
    records = []
    for i, env_seed in enumerate(env_seeds):
        obs = team.reset(int(env_seed))
        acc = _EpisodeAccumulator()
        done = False
        while not done:
            actions = greedy_actions(policy, obs)
            result = team.step(actions)
            acc.add(result, result.rewards - result.costs)
            obs = result.observations
            done = result.done
        reward = episode_reward(
            acc.efficiency_sum, acc.send_counts, team.comm_cost_per_send, team.turbine_count
        )
        total_cost = float(np.sum(acc.send_counts * team.comm_cost_per_send))
        records.append(
            EpisodeRecord(
                episode=i,
                env_seed=int(env_seed),
                reward=reward,
                efficiency_sum=acc.efficiency_sum,
                cost_per_turbine=total_cost / team.turbine_count,
                sends_per_turbine=float(acc.send_counts.mean()),
                alignment_mean=acc.alignment_sum / max(acc.steps, 1),
            )
        )
    return records


def save_policy_value(path: str | Path, policy: PolicyNet, value: ValueNet, metadata: dict | None = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = policy.parameters() + value.parameters()
    meta = {
        "kind": "policy_value",
        "obs_dim": policy.obs_dim,
        "branch_sizes": list(policy.branch_sizes),
        "hidden_units": policy.trunk.layer_sizes[-1],
        "num_layers": len(policy.trunk.layer_sizes) - 1,
    }
    meta.update(metadata or {})
    meta["param_hash"] = parameter_hash(arrays)
    save_arrays(path, arrays, meta)


def load_policy_value(path: str | Path) -> tuple[PolicyNet, ValueNet, dict]:
    meta = load_sidecar(path)
    if meta.get("kind") != "policy_value":
        raise ValueError(f"{path}: not a policy checkpoint")
    obs_dim = int(meta["obs_dim"])
    branch_sizes = [int(b) for b in meta["branch_sizes"]]
    hidden_units = int(meta["hidden_units"])
    num_layers = int(meta["num_layers"])
    rng = np.random.default_rng(0)
    policy = PolicyNet(obs_dim, branch_sizes, hidden_units, num_layers, rng)
    value = ValueNet(obs_dim, hidden_units, num_layers, rng)
    params = policy.parameters() + value.parameters()
    arrays = load_arrays(path)
    if len(arrays) != len(params):
        raise ValueError(f"{path}: checkpoint holds {len(arrays)} arrays, expected {len(params)}")
    for p, a in zip(params, arrays):
        if p.shape != a.shape:
            raise ValueError(f"{path}: checkpoint shape mismatch")
        p[...] = a
    return policy, value, meta
