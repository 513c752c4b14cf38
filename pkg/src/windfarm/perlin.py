"""Seeded 2D gradient (Perlin) noise.

Classic lattice noise: a seeded permutation table hashes integer
lattice corners to unit gradient vectors, corner dot products are
blended with the quintic fade curve.  Raw 2D output lives in
[-sqrt(2)/2, sqrt(2)/2]; we scale by sqrt(2) so callers get [-1, 1]
without thinking about it.  The lattice repeats every 256 cells, which
is far larger than any domain we sample.
"""

from __future__ import annotations

import numpy as np

_TABLE = 256


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


class PerlinField:
    """A fixed, seeded noise field over the plane.

    Instances are immutable after construction and safe to share
    between threads; sampling allocates only per-call temporaries.
    """

    def __init__(self, seed: int):
        rng = np.random.default_rng(seed)
        self.perm = rng.permutation(_TABLE).astype(np.int64)
        angles = rng.uniform(0.0, 2.0 * np.pi, _TABLE)
        self.gradients = np.stack([np.cos(angles), np.sin(angles)], axis=-1)

    def _corner_gradient(self, ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
        idx = self.perm[(self.perm[ix % _TABLE] + iy) % _TABLE]
        return self.gradients[idx]

    def sample(self, points) -> np.ndarray:
        """Noise values in [-1, 1] at points of shape (..., 2)."""
        pts = np.asarray(points, dtype=np.float64)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        ix = np.floor(pts[..., 0]).astype(np.int64)
        iy = np.floor(pts[..., 1]).astype(np.int64)
        fx = pts[..., 0] - ix
        fy = pts[..., 1] - iy

        def corner(dx: int, dy: int) -> np.ndarray:
            grad = self._corner_gradient(ix + dx, iy + dy)
            return grad[..., 0] * (fx - dx) + grad[..., 1] * (fy - dy)

        ux = _fade(fx)
        uy = _fade(fy)
        top = corner(0, 0) + ux * (corner(1, 0) - corner(0, 0))
        bot = corner(0, 1) + ux * (corner(1, 1) - corner(0, 1))
        out = np.sqrt(2.0) * (top + uy * (bot - top))
        return out[0] if scalar else out
