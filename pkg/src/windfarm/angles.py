"""Small angle/vector helpers shared across the simulator.

Angles are degrees throughout the public surface; vectors are float64
numpy arrays of shape (2,) or (m, 2).
"""

from __future__ import annotations

import numpy as np


def unit_vector(angle_deg):
    """Unit vector(s) for angle(s) in degrees, shape (..., 2)."""
    rad = np.deg2rad(np.asarray(angle_deg, dtype=np.float64))
    return np.stack([np.cos(rad), np.sin(rad)], axis=-1)


def vector_angle(vec) -> np.ndarray:
    """Angle(s) in [0, 360) degrees of vector(s) of shape (..., 2)."""
    vec = np.asarray(vec, dtype=np.float64)
    return np.rad2deg(np.arctan2(vec[..., 1], vec[..., 0])) % 360.0


def wrap_deg(angle_deg):
    """Wrap angle(s) into [0, 360)."""
    return np.asarray(angle_deg, dtype=np.float64) % 360.0


def signed_delta_deg(from_deg, to_deg):
    """Shortest signed rotation from one angle to another, in (-180, 180]."""
    d = (np.asarray(to_deg, dtype=np.float64) - np.asarray(from_deg, dtype=np.float64)) % 360.0
    return np.where(d > 180.0, d - 360.0, d)


def angle_between_rad(u, v) -> np.ndarray:
    """Unsigned angle in radians between unit vectors, elementwise on (..., 2).

    The dot product is clipped so antiparallel inputs cannot produce a
    NaN from rounding.  acos keeps the orthogonal case exact: a dot of
    0.0 maps to pi/2, so ratios against pi stay exact at 0.5.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    dot = np.clip(np.sum(u * v, axis=-1), -1.0, 1.0)
    return np.arccos(dot)


def angle_between_deg(u, v) -> np.ndarray:
    """Unsigned angle in [0, 180] degrees between unit vectors."""
    return np.rad2deg(angle_between_rad(u, v))
