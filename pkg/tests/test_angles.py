"""Angle helpers: the exactness of these underpins the reward tests."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from windfarm.angles import (
    angle_between_deg,
    angle_between_rad,
    signed_delta_deg,
    unit_vector,
    vector_angle,
    wrap_deg,
)


def test_unit_vector_cardinal_directions():
    assert_allclose(unit_vector(0.0), [1.0, 0.0], atol=1e-15)
    assert_allclose(unit_vector(90.0), [0.0, 1.0], atol=1e-15)
    assert_allclose(unit_vector(180.0), [-1.0, 0.0], atol=1e-15)
    assert_allclose(unit_vector(270.0), [0.0, -1.0], atol=1e-15)


def test_unit_vector_batch_shape():
    out = unit_vector(np.arange(12).reshape(3, 4))
    assert out.shape == (3, 4, 2)
    assert_allclose(np.linalg.norm(out, axis=-1), 1.0)


@given(st.floats(min_value=-720, max_value=720, allow_nan=False))
def test_vector_angle_round_trip(angle):
    recovered = vector_angle(unit_vector(angle))
    assert abs(signed_delta_deg(angle, recovered)) < 1e-9


def test_wrap_deg_range():
    assert wrap_deg(360.0) == 0.0
    assert wrap_deg(-1.0) == 359.0
    assert wrap_deg(725.0) == pytest.approx(5.0)


@given(
    st.floats(min_value=-1000, max_value=1000, allow_nan=False),
    st.floats(min_value=-1000, max_value=1000, allow_nan=False),
)
def test_signed_delta_is_shortest_path(a, b):
    d = float(signed_delta_deg(a, b))
    assert -180.0 < d <= 180.0
    # adding the delta to the start angle lands on the target angle
    assert abs(wrap_deg(a + d) - wrap_deg(b)) % 360.0 < 1e-6


def test_signed_delta_orientation():
    assert signed_delta_deg(10.0, 30.0) == pytest.approx(20.0)
    assert signed_delta_deg(30.0, 10.0) == pytest.approx(-20.0)
    assert signed_delta_deg(350.0, 10.0) == pytest.approx(20.0)
    assert signed_delta_deg(0.0, 180.0) == pytest.approx(180.0)


def test_angle_between_orthogonal_is_exactly_half_pi():
    # dot product of exactly-orthogonal unit vectors is 0.0, and
    # acos(0.0) is exactly pi/2 in IEEE double; the reward threshold
    # comparison relies on this being exact, not approximately equal
    u = np.array([1.0, 0.0])
    v = np.array([0.0, 1.0])
    assert angle_between_rad(u, v) == np.pi / 2.0
    assert angle_between_deg(u, v) == 90.0


def test_angle_between_handles_rounding_beyond_unit():
    # vectors that are parallel up to float error must not NaN out
    u = np.array([0.6, 0.8])
    assert angle_between_rad(u, u * (1 + 1e-16)) == 0.0
    assert angle_between_deg(u, -u) == pytest.approx(180.0)


@given(
    st.floats(min_value=0, max_value=360, exclude_max=True, allow_nan=False),
    st.floats(min_value=0, max_value=360, exclude_max=True, allow_nan=False),
)
def test_angle_between_matches_wrapped_difference(a, b):
    expected = abs(float(signed_delta_deg(a, b)))
    got = float(angle_between_deg(unit_vector(a), unit_vector(b)))
    assert got == pytest.approx(expected, abs=1e-6)


def test_angle_between_batch():
    u = unit_vector(np.array([0.0, 45.0, 90.0]))
    v = unit_vector(np.array([90.0, 45.0, 270.0]))
    assert_allclose(angle_between_deg(u, v), [90.0, 0.0, 180.0], atol=1e-9)
