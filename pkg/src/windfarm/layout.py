"""Turbine placement inside the unit square."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .configio import ConfigError

GRID_SPACING = 0.2
RANDOM_MARGIN = 0.05
RANDOM_MIN_SEPARATION = 0.08

# column counts that reproduce the canonical grids (2x4, 4x4, 4x6)
_PREFERRED_COLUMNS = {8: 4, 16: 4, 24: 6}


class LayoutPattern(str, enum.Enum):
    DEFAULT = "default"
    RANDOM = "random"


@dataclass
class LayoutConfig:
    pattern: LayoutPattern = LayoutPattern.DEFAULT
    turbine_count: int = 8

    def __post_init__(self) -> None:
        if isinstance(self.pattern, str):
            self.pattern = LayoutPattern(self.pattern)
        if self.turbine_count < 1:
            raise ConfigError("turbine_count must be >= 1")
        if self.pattern is LayoutPattern.RANDOM and self.turbine_count > 100:
            raise ConfigError("random layouts support at most 100 turbines")


@dataclass
class FarmLayout:
    positions: np.ndarray  # (n, 2) in [0, 1]^2
    pattern: LayoutPattern
    farm_width: float = field(default=1.0)

    @property
    def turbine_count(self) -> int:
        return len(self.positions)


def _grid_positions(n: int) -> np.ndarray:
    cols = _PREFERRED_COLUMNS.get(n, int(np.ceil(np.sqrt(n))))
    rows = int(np.ceil(n / cols))
    spacing = GRID_SPACING
    # shrink spacing if the requested grid would not fit the unit square
    span_x, span_y = (cols - 1) * spacing, (rows - 1) * spacing
    if max(span_x, span_y) > 1.0:
        spacing = 1.0 / max(cols - 1, rows - 1)
        span_x, span_y = (cols - 1) * spacing, (rows - 1) * spacing
    x0, y0 = (1.0 - span_x) / 2.0, (1.0 - span_y) / 2.0
    pts = []
    for i in range(n):
        r, c = divmod(i, cols)
        pts.append((x0 + c * spacing, y0 + r * spacing))
    return np.asarray(pts, dtype=np.float64)


def _random_positions(n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = RANDOM_MARGIN, 1.0 - RANDOM_MARGIN
    pts: list[np.ndarray] = []
    for _ in range(100_000):
        cand = rng.uniform(lo, hi, size=2)
        if all(np.linalg.norm(cand - p) >= RANDOM_MIN_SEPARATION for p in pts):
            pts.append(cand)
            if len(pts) == n:
                return np.stack(pts)
    raise ConfigError(f"could not place {n} turbines with separation {RANDOM_MIN_SEPARATION}")


def make_layout(config: LayoutConfig, rng: np.random.Generator | int | None = None) -> FarmLayout:
    """Instantiate a layout; random patterns draw from ``rng``."""
    if config.pattern is LayoutPattern.DEFAULT:
        positions = _grid_positions(config.turbine_count)
    else:
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        positions = _random_positions(config.turbine_count, rng)
    return FarmLayout(positions=positions, pattern=config.pattern)
