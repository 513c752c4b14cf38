"""Environment: reward semantics, observation stacking, episode lifecycle."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from windfarm.angles import unit_vector, vector_angle, signed_delta_deg
from windfarm.env import (
    EPISODE_LENGTH,
    FarmEnv,
    RewardMode,
    RotationAction,
    collective_efficiency,
    contribution_from_alignment,
    opposition_actions,
    turbine_contribution,
)
from windfarm.layout import LayoutConfig, make_layout
from windfarm.wind import WindConfig


def reward_oracle(angle_deg):
    """Direct transcription of the energy rule on the angle itself."""
    a = angle_deg / 180.0
    return a if a > 0.5 else -1.0


def make_env(count=8, **kw):
    layout = make_layout(LayoutConfig(turbine_count=count), np.random.default_rng(0))
    wind = kw.pop("wind_config", None) or WindConfig()
    kw.setdefault("rng", np.random.default_rng(1))
    return FarmEnv(layout, wind, **kw)


# --- contribution / efficiency ---------------------------------------------


@pytest.mark.parametrize(
    "angle,expected",
    [
        (180.0, 1.0),
        (135.0, 0.75),
        (91.0, 91.0 / 180.0),
        (90.0, -1.0),  # the boundary is strict
        (89.999, -1.0),
        (45.0, -1.0),
        (0.0, -1.0),
    ],
)
def test_contribution_against_hand_rule(angle, expected):
    wind = unit_vector(0.0)
    orientation = unit_vector(angle)
    got = turbine_contribution(wind, orientation)
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(reward_oracle(angle), abs=1e-12)


def test_contribution_at_exact_boundary_is_negative_one():
    # orthogonal unit vectors give alignment exactly 0.5, which the
    # strict inequality sends to the -1 branch with no float slop
    assert turbine_contribution(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == -1.0


@settings(deadline=None, max_examples=100)
@given(st.floats(min_value=0, max_value=360, exclude_max=True, allow_nan=False),
       st.floats(min_value=0, max_value=360, exclude_max=True, allow_nan=False))
def test_contribution_matches_oracle_for_any_pair(wind_deg, ori_deg):
    angle = abs(float(signed_delta_deg(wind_deg, ori_deg)))
    got = turbine_contribution(unit_vector(wind_deg), unit_vector(ori_deg))
    assert got == pytest.approx(reward_oracle(angle), abs=1e-9)


def test_contribution_from_alignment_vectorized():
    a = np.array([0.0, 0.4999, 0.5, 0.5001, 0.75, 1.0])
    out = contribution_from_alignment(a)
    assert_allclose(out, [-1.0, -1.0, -1.0, 0.5001, 0.75, 1.0])


def test_collective_efficiency_is_mean():
    contribs = np.array([1.0, -1.0, 0.75, 0.75])
    assert collective_efficiency(contribs) == pytest.approx(0.375)


def test_all_optimal_and_all_bad_bounds():
    env = make_env(randomize_wind_angle=False, randomize_orientations=False,
                   wind_config=WindConfig(main_rotation_step_max=0.0, noise_amplitude=0.0))
    env.begin_episode(seed=0)
    # wind blows toward +x everywhere; orient turbines at 180 (optimal)
    env.orientations = np.full(8, 180.0)
    res = env.observe()
    assert res.efficiency == pytest.approx(1.0)
    assert_allclose(res.contributions, 1.0)
    env.begin_episode(seed=0)
    env.orientations = np.zeros(8)  # facing the wind: no energy
    res = env.observe()
    assert res.efficiency == pytest.approx(-1.0)


# --- episode lifecycle ------------------------------------------------------


def test_default_episode_length_and_done_flag():
    env = make_env(episode_length=5)
    env.reset(seed=0)
    for step in range(1, 6):
        res = env.step(np.ones(8, dtype=np.int64))
        assert res.step_index == step
        assert res.done == (step == 5)
    with pytest.raises(RuntimeError):
        env.advance(np.ones(8, dtype=np.int64))
    assert EPISODE_LENGTH == 2000


def test_rotation_action_applies_one_degree():
    env = make_env(randomize_orientations=False)
    env.begin_episode(seed=0)
    env.orientations = np.array([10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 359.5])
    actions = np.array([RotationAction.INCREASE] * 4 + [RotationAction.DECREASE] * 3 + [RotationAction.INCREASE])
    env.advance(actions)
    assert_allclose(env.orientations[:4], [11.0, 21.0, 31.0, 41.0])
    assert_allclose(env.orientations[4:7], [49.0, 59.0, 69.0])
    assert env.orientations[7] == pytest.approx(0.5)  # wraps
    env.observe()


def test_action_validation():
    env = make_env()
    env.reset(seed=0)
    with pytest.raises(ValueError):
        env.advance(np.ones(7, dtype=np.int64))  # wrong count
    with pytest.raises(ValueError):
        env.advance(np.full(8, 3, dtype=np.int64))  # out of range


def test_double_observe_rejected():
    env = make_env()
    env.reset(seed=0)
    env.advance(np.ones(8, dtype=np.int64))
    env.observe()
    with pytest.raises(RuntimeError):
        env.observe()


def test_reset_result_has_zero_rewards_and_stacked_obs():
    env = make_env()
    res = env.reset(seed=3)
    assert res.observations.shape == (8, 8)  # two stacked 4-wide frames
    assert_allclose(res.rewards, 0.0)
    assert res.step_index == 0
    assert not res.done


# --- observations -----------------------------------------------------------


def test_observation_layout_and_stacking():
    env = make_env(randomize_orientations=False)
    env.begin_episode(seed=5)
    env.orientations = np.arange(8, dtype=np.float64) * 10.0
    first = env.observe().observations
    # frame = [orientation vector, local wind vector]; after reset the
    # previous frame is a copy of the current one
    assert first.shape == (8, 8)
    assert_allclose(first[:, :4], first[:, 4:])
    assert_allclose(first[0, 4:6], unit_vector(0.0))
    assert_allclose(first[3, 4:6], unit_vector(30.0))
    wind_vec = first[0, 6:8]
    assert np.linalg.norm(wind_vec) == pytest.approx(1.0)

    res = env.step(np.full(8, RotationAction.INCREASE, dtype=np.int64))
    second = res.observations
    # the old current frame became the previous frame
    assert_allclose(second[:, :4], first[:, 4:])
    assert_allclose(second[0, 4:6], unit_vector(1.0))


def test_observation_includes_prediction_channel_when_enabled():
    env = make_env(include_prediction=True)
    env.begin_episode(seed=2)
    preds = np.tile(unit_vector(45.0), (8, 1))
    obs = env.observe(preds).observations
    assert obs.shape == (8, 12)
    assert_allclose(obs[:, 10:12], np.broadcast_to(unit_vector(45.0), (8, 2)))


def test_prediction_required_iff_enabled():
    env = make_env(include_prediction=True)
    env.begin_episode(seed=2)
    with pytest.raises(ValueError):
        env.observe()
    env2 = make_env()
    env2.begin_episode(seed=2)
    with pytest.raises(ValueError):
        env2.observe(np.zeros((8, 2)))


def test_reward_modes_share_or_split_efficiency():
    env_share = make_env(reward_mode=RewardMode.PER_SHARE)
    env_share.reset(seed=9)
    res = env_share.step(np.ones(8, dtype=np.int64))
    assert_allclose(res.rewards, res.contributions / 8.0)
    assert res.efficiency == pytest.approx(float(res.rewards.sum()))

    env_team = make_env(reward_mode=RewardMode.SHARED)
    env_team.reset(seed=9)
    res = env_team.step(np.ones(8, dtype=np.int64))
    assert_allclose(res.rewards, np.full(8, res.efficiency))


def test_seeded_episodes_replay_identically():
    env = make_env()
    traces = []
    for _ in range(2):
        env.reset(seed=123)
        trace = []
        for _ in range(20):
            res = env.step(np.ones(8, dtype=np.int64))
            trace.append((res.observations.copy(), res.rewards.copy(), res.efficiency))
        traces.append(trace)
    for (o1, r1, e1), (o2, r2, e2) in zip(*traces):
        assert_allclose(o1, o2, rtol=0, atol=0)
        assert_allclose(r1, r2, rtol=0, atol=0)
        assert e1 == e2


def test_opposition_script_converges_on_still_wind():
    env = make_env(randomize_wind_angle=False, randomize_orientations=False,
                   wind_config=WindConfig(main_rotation_step_max=0.0, noise_amplitude=0.0))
    env.begin_episode(seed=0)
    env.orientations = np.full(8, 90.0)  # wind toward 0, optimal is 180
    for _ in range(91):
        env.advance(opposition_actions(env))
        res = env.observe()
    assert res.efficiency == pytest.approx(1.0)
    # stays put once aligned
    env.advance(opposition_actions(env))
    res = env.observe()
    assert res.efficiency == pytest.approx(1.0)
