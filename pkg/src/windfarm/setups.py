"""The four agent/communication configurations of the farm task.

All of them expose the same team interface to the trainer: a batch of
policy agents observing stacked frames and emitting branched discrete
actions.  The variants are

- single_agent: one agent sees every turbine and outputs one rotation
  branch per turbine.
- multi_agent: one agent per turbine, no messaging.
- ma_broadcasting: one agent per turbine; every turbine sends its wind
  measurement to its graph neighbours every step, paying a fixed cost,
  and observes a frozen-net prediction fed by the pooled inbox.
- ma_by_choice: like broadcasting, but sending is a second action
  branch and only actual sends are charged.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .comm import InboxSystem, Message, NeighborGraph, build_knn_graph, pool_inbox
from .env import EnvStepResult, FarmEnv, RewardMode
from .layout import FarmLayout
from .predictor import WindPredictor
from .wind import WindConfig

DEFAULT_COMM_COST = 0.0125
DEFAULT_NEIGHBOR_COUNT = 4
SEND_ACTION = 1  # value of the send branch that transmits


class SetupKind(str, enum.Enum):
    SINGLE_AGENT = "single_agent"
    MULTI_AGENT = "multi_agent"
    BROADCASTING = "ma_broadcasting"
    BY_CHOICE = "ma_by_choice"


@dataclass
class SetupShape:
    """Per-agent interface dimensions of a setup."""

    agent_count: int
    frame_width: int  # per-agent features per frame (before stacking)
    obs_dim: int  # stacked observation length
    branch_sizes: list[int]
    neighbor_count: int

    @property
    def uses_comm(self) -> bool:
        return self.neighbor_count > 0 or len(self.branch_sizes) > 1


def setup_shape(kind: SetupKind, turbine_count: int, neighbor_count: int | None = None) -> SetupShape:
    kind = SetupKind(kind)
    if kind is SetupKind.SINGLE_AGENT:
        return SetupShape(1, 4 * turbine_count, 8 * turbine_count, [3] * turbine_count, 0)
    if kind is SetupKind.MULTI_AGENT:
        return SetupShape(turbine_count, 4, 8, [3], 0)
    k = DEFAULT_NEIGHBOR_COUNT if neighbor_count is None else neighbor_count
    branches = [3] if kind is SetupKind.BROADCASTING else [3, 2]
    return SetupShape(turbine_count, 6, 12, branches, k)


@dataclass
class TeamStepResult:
    observations: np.ndarray  # (agent_count, obs_dim)
    rewards: np.ndarray  # (agent_count,), before communication costs
    costs: np.ndarray  # (agent_count,), communication costs this step
    efficiency: float
    alignment_mean: float
    done: bool
    step_index: int
    sends: np.ndarray  # (turbine_count,) bool, all False when no messaging
    contributions: np.ndarray  # (turbine_count,) per-turbine reward terms
    alignments: np.ndarray  # (turbine_count,) in [0, 1]


class MultiAgentTeam:
    """One agent per turbine, observations are purely local."""

    kind = SetupKind.MULTI_AGENT

    def __init__(self, env: FarmEnv):
        if env.include_prediction:
            raise ValueError("plain multi-agent team takes an env without predictions")
        self.env = env
        shape = setup_shape(self.kind, env.turbine_count)
        self.agent_count = shape.agent_count
        self.obs_dim = shape.obs_dim
        self.branch_sizes = shape.branch_sizes
        self.comm_cost_per_send = 0.0
        self._no_sends = np.zeros(env.turbine_count, dtype=bool)

    @property
    def turbine_count(self) -> int:
        return self.env.turbine_count

    def reset(self, seed: int | None = None) -> np.ndarray:
        return self.env.reset(seed).observations

    def step(self, actions: np.ndarray) -> TeamStepResult:
        res = self.env.step(np.asarray(actions)[:, 0])
        return _team_result(res, np.zeros(self.agent_count), self._no_sends)


class SingleAgentTeam:
    """One agent controls all turbines; frames are concatenated globally."""

    kind = SetupKind.SINGLE_AGENT

    def __init__(self, env: FarmEnv):
        if env.include_prediction:
            raise ValueError("single-agent team takes an env without predictions")
        self.env = env
        shape = setup_shape(self.kind, env.turbine_count)
        self.agent_count = 1
        self.obs_dim = shape.obs_dim
        self.branch_sizes = shape.branch_sizes
        self.comm_cost_per_send = 0.0
        self._no_sends = np.zeros(env.turbine_count, dtype=bool)

    @property
    def turbine_count(self) -> int:
        return self.env.turbine_count

    def _global_obs(self) -> np.ndarray:
        prev = self.env.previous_frame.reshape(-1)
        cur = self.env.current_frame.reshape(-1)
        return np.concatenate([prev, cur])[None, :]

    def reset(self, seed: int | None = None) -> np.ndarray:
        self.env.reset(seed)
        return self._global_obs()

    def step(self, actions: np.ndarray) -> TeamStepResult:
        res = self.env.step(np.asarray(actions)[0])
        return TeamStepResult(
            observations=self._global_obs(),
            rewards=np.array([res.efficiency]),
            costs=np.zeros(1),
            efficiency=res.efficiency,
            alignment_mean=float(res.alignments.mean()),
            done=res.done,
            step_index=res.step_index,
            sends=self._no_sends,
            contributions=res.contributions,
            alignments=res.alignments,
        )


class CommTeam:
    """Per-turbine agents exchanging wind measurements over a kNN graph.

    Messages deposited at step t are pooled into a single weighted wind
    vector at t+1 and run through the frozen predictor, whose output
    joins the observation frame.  With by_choice the second action
    branch gates sending; otherwise every turbine sends every step.
    """

    def __init__(
        self,
        env: FarmEnv,
        predictor: WindPredictor,
        *,
        neighbor_count: int = DEFAULT_NEIGHBOR_COUNT,
        comm_cost: float = DEFAULT_COMM_COST,
        by_choice: bool = False,
    ):
        if not env.include_prediction:
            raise ValueError("communication team needs an env built with include_prediction")
        if predictor is None:
            raise ValueError("communication team needs a predictor")
        self.env = env
        self.predictor = predictor
        self.kind = SetupKind.BY_CHOICE if by_choice else SetupKind.BROADCASTING
        shape = setup_shape(self.kind, env.turbine_count, neighbor_count)
        self.agent_count = shape.agent_count
        self.obs_dim = shape.obs_dim
        self.branch_sizes = shape.branch_sizes
        self.by_choice = by_choice
        self.comm_cost_per_send = comm_cost
        self.graph: NeighborGraph = build_knn_graph(env.positions, shape.neighbor_count)
        self.inboxes = InboxSystem(env.turbine_count)
        self._all_send = np.ones(env.turbine_count, dtype=bool)
        self.last_pooled = np.zeros((env.turbine_count, 2))
        self.last_predictions = np.zeros((env.turbine_count, 2))
        self.last_inbox_sizes = [0] * env.turbine_count

    @property
    def turbine_count(self) -> int:
        return self.env.turbine_count

    def _pooled(self) -> np.ndarray:
        width = self.env.layout.farm_width
        self.last_inbox_sizes = self.inboxes.readable_counts()
        return np.stack(
            [
                pool_inbox(self.env.positions[i], self.inboxes.read(i), width)
                for i in range(self.env.turbine_count)
            ]
        )

    def _predictions(self, pooled: np.ndarray) -> np.ndarray:
        self.last_predictions = self.predictor.predict(pooled, self.env.local_winds)
        return self.last_predictions

    def reset(self, seed: int | None = None) -> np.ndarray:
        self.env.begin_episode(seed)
        self.inboxes.clear()
        self.last_pooled = self._pooled()
        return self.env.observe(self._predictions(self.last_pooled)).observations

    def step(self, actions: np.ndarray) -> TeamStepResult:
        actions = np.asarray(actions)
        sends = actions[:, 1] == SEND_ACTION if self.by_choice else self._all_send
        step_index = self.env.step_index
        for i in np.flatnonzero(sends):
            self.inboxes.deliver(
                Message(self.env.positions[i], self.env.local_winds[i], step_index),
                self.graph.out_neighbors[i],
            )
        self.env.advance(actions[:, 0])
        self.inboxes.flip()
        self.last_pooled = self._pooled()
        res = self.env.observe(self._predictions(self.last_pooled))
        costs = np.where(sends, self.comm_cost_per_send, 0.0)
        return _team_result(res, costs, sends)


def _team_result(res: EnvStepResult, costs: np.ndarray, sends: np.ndarray) -> TeamStepResult:
    return TeamStepResult(
        observations=res.observations,
        rewards=res.rewards,
        costs=costs,
        efficiency=res.efficiency,
        alignment_mean=float(res.alignments.mean()),
        done=res.done,
        step_index=res.step_index,
        sends=sends,
        contributions=res.contributions,
        alignments=res.alignments,
    )


def build_team(
    kind: SetupKind,
    layout: FarmLayout,
    wind_config: WindConfig,
    *,
    reward_mode: RewardMode = RewardMode.PER_SHARE,
    episode_length: int = 2000,
    neighbor_count: int = DEFAULT_NEIGHBOR_COUNT,
    comm_cost: float = DEFAULT_COMM_COST,
    predictor: WindPredictor | None = None,
    rng: np.random.Generator | int | None = None,
):
    """Construct the environment and team for one setup."""
    kind = SetupKind(kind)
    comm = kind in (SetupKind.BROADCASTING, SetupKind.BY_CHOICE)
    env = FarmEnv(
        layout,
        wind_config,
        episode_length=episode_length,
        reward_mode=reward_mode,
        include_prediction=comm,
        rng=rng,
    )
    if kind is SetupKind.SINGLE_AGENT:
        return SingleAgentTeam(env)
    if kind is SetupKind.MULTI_AGENT:
        return MultiAgentTeam(env)
    return CommTeam(
        env,
        predictor,
        neighbor_count=neighbor_count,
        comm_cost=comm_cost,
        by_choice=kind is SetupKind.BY_CHOICE,
    )
