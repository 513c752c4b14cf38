"""The farm environment: turbines rotating under a drifting wind.

Each turbine is an agent with a 3-way rotation action.  Per step the
wind advances, orientations rotate by at most one increment, and each
turbine scores the unsigned angle between its orientation and the
local wind, normalised to [0, 1]; a turbine below the half-turned
threshold contributes a flat -1 instead.  The collective efficiency is
the mean contribution.

Observations are two stacked frames (previous first); a frame holds
the orientation and local wind unit vectors, plus an externally
supplied wind prediction when the environment is built with
include_prediction.  advance()/observe() are exposed separately so a
messaging layer can pool inboxes between the state update and the
observation; step() is the fused convenience.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .angles import angle_between_rad, signed_delta_deg, unit_vector, vector_angle, wrap_deg
from .layout import FarmLayout
from .wind import WindConfig, WindState, sample_local_wind, wind_init, wind_step

EPISODE_LENGTH = 2000


class RotationAction(enum.IntEnum):
    DECREASE = 0  # rotate by -turbine_rotation_step degrees
    HOLD = 1
    INCREASE = 2


class RewardMode(str, enum.Enum):
    PER_SHARE = "per_share"  # each turbine receives its own contribution / n
    SHARED = "shared"  # every turbine receives the collective efficiency


def contribution_from_alignment(alignment) -> np.ndarray:
    """Map normalised opposition angle(s) in [0, 1] to contribution(s)."""
    a = np.asarray(alignment, dtype=np.float64)
    return np.where(a > 0.5, a, -1.0)


def turbine_contribution(wind_vec, orientation_vec) -> np.ndarray:
    """Per-turbine score: normalised opposition angle, or -1 below half.

    The normalised angle a = angle(wind, orientation) / pi is 1 when the
    turbine faces straight into the wind and 0 when it points downwind.
    Above 0.5 the turbine contributes a; at or below it contributes -1,
    so a perfectly orthogonal pair (a exactly 0.5) is already penalised.
    """
    return contribution_from_alignment(angle_between_rad(wind_vec, orientation_vec) / np.pi)


def collective_efficiency(contributions) -> float:
    return float(np.mean(contributions))


@dataclass
class EnvStepResult:
    observations: np.ndarray  # (n, obs_dim), stacked frames per turbine
    rewards: np.ndarray  # (n,)
    efficiency: float
    done: bool
    step_index: int
    # diagnostics, not part of the agent interface
    contributions: np.ndarray  # (n,)
    alignments: np.ndarray  # (n,), normalised opposition angles in [0, 1]


class FarmEnv:
    """Episodic farm simulation over a fixed layout.

    The environment owns one RNG that drives wind initialisation, the
    wind walk and orientation resets, so two environments built with
    the same seed and fed the same actions produce bit-identical
    trajectories regardless of any messaging stacked on top.
    """

    FRAME_BASE = 4  # orientation vector + local wind vector

    def __init__(
        self,
        layout: FarmLayout,
        wind_config: WindConfig,
        *,
        episode_length: int = EPISODE_LENGTH,
        reward_mode: RewardMode = RewardMode.PER_SHARE,
        include_prediction: bool = False,
        randomize_wind_angle: bool = True,
        randomize_orientations: bool = True,
        rng: np.random.Generator | int | None = None,
    ):
        if episode_length < 1:
            raise ValueError("episode_length must be >= 1")
        self.layout = layout
        self.wind_config = wind_config
        self.episode_length = episode_length
        self.reward_mode = RewardMode(reward_mode)
        self.include_prediction = include_prediction
        self.randomize_wind_angle = randomize_wind_angle
        self.randomize_orientations = randomize_orientations
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.frame_width = self.FRAME_BASE + (2 if include_prediction else 0)
        self.wind: WindState | None = None
        self.orientations: np.ndarray | None = None  # (n,) degrees
        self.local_winds: np.ndarray | None = None  # (n, 2)
        self.previous_frame: np.ndarray | None = None
        self.current_frame: np.ndarray | None = None
        self.step_index = 0
        self.done = False
        self._observed = False

    @property
    def turbine_count(self) -> int:
        return self.layout.turbine_count

    @property
    def positions(self) -> np.ndarray:
        return self.layout.positions

    @property
    def obs_dim(self) -> int:
        return 2 * self.frame_width

    def orientation_vectors(self) -> np.ndarray:
        return unit_vector(self.orientations)

    def begin_episode(self, seed: int | None = None) -> None:
        """Reset wind and orientations; observations are not built yet."""
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.wind = wind_init(self.wind_config, self.rng, randomize_angle=self.randomize_wind_angle)
        n = self.turbine_count
        if self.randomize_orientations:
            self.orientations = self.rng.uniform(0.0, 360.0, n)
        else:
            self.orientations = np.zeros(n)
        self.local_winds = sample_local_wind(self.wind, self.positions)
        self.previous_frame = None
        self.current_frame = None
        self.step_index = 0
        self.done = False
        self._observed = False

    def advance(self, actions) -> None:
        """Apply rotations and move the wind; no observations yet."""
        if self.wind is None:
            raise RuntimeError("advance() before begin_episode()/reset()")
        if self.done:
            raise RuntimeError("episode is done; reset before stepping")
        acts = np.asarray(actions, dtype=np.int64)
        if acts.shape != (self.turbine_count,):
            raise ValueError(f"expected {self.turbine_count} actions, got shape {acts.shape}")
        if np.any((acts < 0) | (acts > 2)):
            raise ValueError("actions must be in {0, 1, 2}")
        wind_step(self.wind)
        deltas = (acts - 1) * self.wind_config.turbine_rotation_step
        self.orientations = wrap_deg(self.orientations + deltas)
        self.local_winds = sample_local_wind(self.wind, self.positions)
        self.step_index += 1
        self.done = self.step_index >= self.episode_length
        self._observed = False

    def observe(self, predictions=None) -> EnvStepResult:
        """Build stacked observations and rewards for the current state.

        Must be called exactly once per begin_episode()/advance(), as it
        pushes the new frame onto the two-frame stack.
        """
        if self.local_winds is None:
            raise RuntimeError("observe() before begin_episode()/reset()")
        if self._observed:
            raise RuntimeError("observe() called twice for the same state")
        self._observed = True
        if self.include_prediction:
            if predictions is None:
                raise ValueError("environment expects per-turbine wind predictions")
            preds = np.asarray(predictions, dtype=np.float64)
            if preds.shape != (self.turbine_count, 2):
                raise ValueError(f"predictions must have shape ({self.turbine_count}, 2)")
            frame = np.concatenate([self.orientation_vectors(), self.local_winds, preds], axis=1)
        else:
            if predictions is not None:
                raise ValueError("environment was built without prediction inputs")
            frame = np.concatenate([self.orientation_vectors(), self.local_winds], axis=1)
        self.previous_frame = frame if self.current_frame is None else self.current_frame
        self.current_frame = frame
        observations = np.concatenate([self.previous_frame, frame], axis=1)

        alignments = angle_between_rad(self.local_winds, self.orientation_vectors()) / np.pi
        contributions = contribution_from_alignment(alignments)
        efficiency = collective_efficiency(contributions)
        if self.step_index == 0:
            rewards = np.zeros(self.turbine_count)
        elif self.reward_mode is RewardMode.SHARED:
            rewards = np.full(self.turbine_count, efficiency)
        else:
            rewards = contributions / self.turbine_count
        return EnvStepResult(
            observations=observations,
            rewards=rewards,
            efficiency=efficiency,
            done=self.done,
            step_index=self.step_index,
            contributions=contributions,
            alignments=alignments,
        )

    def reset(self, seed: int | None = None, predictions=None) -> EnvStepResult:
        self.begin_episode(seed)
        return self.observe(predictions)

    def step(self, actions, predictions=None) -> EnvStepResult:
        self.advance(actions)
        return self.observe(predictions)


def opposition_actions(env: FarmEnv) -> np.ndarray:
    """Scripted baseline: rotate every turbine toward facing the wind.

    Targets the direction opposite the local wind vector (maximal
    contribution) and holds once within half a rotation increment.
    """
    wind_angles = vector_angle(env.local_winds)
    delta = signed_delta_deg(env.orientations, wind_angles + 180.0)
    half = env.wind_config.turbine_rotation_step / 2.0
    actions = np.full(env.turbine_count, RotationAction.HOLD, dtype=np.int64)
    actions[delta > half] = RotationAction.INCREASE
    actions[delta < -half] = RotationAction.DECREASE
    return actions
