"""Wind model: a rotating main direction plus spatially correlated noise.

The main direction performs a bounded random walk (its angular velocity
decays slightly, gets a small uniform kick, and is clamped each step),
while per-position
deviation comes from a Perlin field whose lattice drifts downwind, so a
gust seen upwind arrives at downstream positions a few steps later.

State lives in an explicit WindState value.  wind_step mutates and
returns the state it is given; use WindState.copy() to fork a
trajectory (each thread must own its copy, sharing is not supported).
"""

from __future__ import annotations

import copy as _copy
from dataclasses import dataclass, field

import numpy as np

from .angles import unit_vector, wrap_deg
from .configio import ConfigError
from .perlin import PerlinField


@dataclass
class WindConfig:
    """Parameters of the wind process.

    main_rotation_step_max: clamp on the main direction's angular
        velocity, degrees per step.
    turbine_rotation_step: degrees a turbine may rotate per step; kept
        here because controllability (turbines out-turning the wind) is
        a property of the pair, enforced where an experiment is built.
    noise_scale: spatial frequency of the deviation field; higher means
        neighbouring turbines see less correlated wind.
    noise_amplitude: peak angular deviation from the main direction, in
        degrees; must stay below 90 so local wind never flips against
        the main direction.
    advection_speed: farm widths per step the deviation field drifts
        along the main direction.
    velocity_damping: per-step decay of the angular velocity toward
        zero.  Without it the clamped random walk spends half its time
        beyond any fixed tracking speed (its stationary distribution is
        near-uniform over the clamp range); a small decay concentrates
        the velocity near zero while still letting gusts out-turn the
        turbines occasionally.
    """

    main_rotation_step_max: float = 2.0
    turbine_rotation_step: float = 1.0
    noise_scale: float = 3.0
    noise_amplitude: float = 25.0
    advection_speed: float = 0.01
    velocity_damping: float = 0.02

    def __post_init__(self) -> None:
        if self.main_rotation_step_max < 0:
            raise ConfigError("main_rotation_step_max must be >= 0")
        if self.turbine_rotation_step <= 0:
            raise ConfigError("turbine_rotation_step must be > 0")
        if self.noise_scale <= 0:
            raise ConfigError("noise_scale must be > 0")
        if not 0.0 <= self.noise_amplitude < 90.0:
            raise ConfigError("noise_amplitude must be in [0, 90)")
        if self.advection_speed < 0:
            raise ConfigError("advection_speed must be >= 0")
        if not 0.0 <= self.velocity_damping < 1.0:
            raise ConfigError("velocity_damping must be in [0, 1)")


@dataclass
class WindState:
    """Mutable wind process state; see module docstring for ownership."""

    config: WindConfig
    main_angle: float
    angular_velocity: float
    drift: np.ndarray
    noise: PerlinField
    rng: np.random.Generator
    step_count: int = field(default=0)
    # interactive override: holds the main angle fixed while set; the
    # random walk's draws still happen so releasing the pin leaves the
    # rng stream exactly where an unpinned run would have it
    pinned_angle: float | None = None

    def copy(self) -> "WindState":
        """Independent copy, including the generator's stream position."""
        return WindState(
            config=self.config,
            main_angle=self.main_angle,
            angular_velocity=self.angular_velocity,
            drift=self.drift.copy(),
            noise=self.noise,
            rng=_copy.deepcopy(self.rng),
            step_count=self.step_count,
            pinned_angle=self.pinned_angle,
        )


def wind_init(
    config: WindConfig,
    rng: np.random.Generator | int | None = None,
    randomize_angle: bool = True,
) -> WindState:
    """Fresh wind state; main angle uniform in [0, 360) unless disabled."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    noise = PerlinField(int(rng.integers(0, 2**31)))
    main_angle = float(rng.uniform(0.0, 360.0)) if randomize_angle else 0.0
    return WindState(
        config=config,
        main_angle=main_angle,
        angular_velocity=0.0,
        drift=np.zeros(2),
        noise=noise,
        rng=rng,
    )


def wind_step(state: WindState) -> WindState:
    """Advance one step: kick and clamp velocity, rotate, drift the noise."""
    cfg = state.config
    vmax = cfg.main_rotation_step_max
    kick = state.rng.uniform(-0.1 * vmax, 0.1 * vmax)
    if state.pinned_angle is None:
        damped = state.angular_velocity * (1.0 - cfg.velocity_damping)
        state.angular_velocity = float(np.clip(damped + kick, -vmax, vmax))
        state.main_angle = float(wrap_deg(state.main_angle + state.angular_velocity))
    else:
        state.angular_velocity = 0.0
        state.main_angle = float(wrap_deg(state.pinned_angle))
    state.drift += cfg.advection_speed * unit_vector(state.main_angle)
    state.step_count += 1
    return state


def sample_local_wind(state: WindState, positions) -> np.ndarray:
    """Unit wind vector(s) at farm position(s) in [0, 1]^2.

    Accepts shape (2,) or (m, 2) and returns the matching shape.  The
    deviation angle is noise_amplitude * perlin, so it never exceeds
    the configured amplitude in magnitude.
    """
    pts = np.asarray(positions, dtype=np.float64)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] != 2:
        raise ValueError(f"positions must have shape (m, 2), got {pts.shape}")
    if np.any(pts < 0.0) or np.any(pts > 1.0):
        raise ValueError("positions must lie inside the unit square")
    deviation = state.config.noise_amplitude * state.noise.sample(
        (pts - state.drift) * state.config.noise_scale
    )
    vecs = unit_vector(state.main_angle + deviation)
    return vecs[0] if scalar else vecs
