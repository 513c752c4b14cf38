"""Policy optimisation: GAE vs the double-sum definition, hand-derived
gradients vs finite differences (per loss component), clip behaviour,
rollout buffer mechanics, and advantage-normalisation invariance."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from windfarm.configio import ConfigError
from windfarm.nn import numeric_gradient, parameter_vector, set_parameter_vector, softmax
from windfarm.ppo import (
    PolicyNet,
    PpoConfig,
    PpoLearner,
    RolloutBatch,
    RolloutBuffer,
    ValueNet,
    compute_gae,
    greedy_actions,
    joint_log_prob,
    ppo_grads,
    ppo_loss,
    sample_actions,
)


def gae_double_sum(rewards, values, bootstrap, gamma, lam):
    """Direct transcription of the definition: A_t = sum_l (gamma*lam)^l * delta_{t+l}."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    T = len(rewards)
    tail = np.broadcast_to(np.asarray(bootstrap, dtype=np.float64), values.shape[1:])
    vals = np.concatenate([values, tail[None]], axis=0)
    adv = np.zeros_like(values)
    for t in range(T):
        total = np.zeros(values.shape[1:])
        for l in range(T - t):
            delta = rewards[t + l] + gamma * vals[t + l + 1] - vals[t + l]
            total = total + (gamma * lam) ** l * delta
        adv[t] = total
    return adv, adv + values


# --- GAE --------------------------------------------------------------------


def test_gae_matches_double_sum_on_random_trajectories():
    rng = np.random.default_rng(0)
    for _ in range(300):
        T = int(rng.integers(1, 11))
        rewards = rng.normal(size=T)
        values = rng.normal(size=T)
        bootstrap = float(rng.normal())
        gamma = float(rng.uniform(0.5, 1.0))
        lam = float(rng.uniform(0.0, 1.0))
        adv, ret = compute_gae(rewards, values, bootstrap, gamma, lam)
        oadv, oret = gae_double_sum(rewards, values, bootstrap, gamma, lam)
        assert_allclose(adv, oadv, rtol=0, atol=1e-10)
        assert_allclose(ret, oret, rtol=0, atol=1e-10)


def test_gae_broadcasts_over_agents():
    rng = np.random.default_rng(1)
    rewards = rng.normal(size=(7, 4))
    values = rng.normal(size=(7, 4))
    bootstrap = rng.normal(size=4)
    adv, ret = compute_gae(rewards, values, bootstrap, 0.9, 0.95)
    oadv, oret = gae_double_sum(rewards, values, bootstrap, 0.9, 0.95)
    assert adv.shape == (7, 4)
    assert_allclose(adv, oadv, rtol=0, atol=1e-10)
    assert_allclose(ret, oret, rtol=0, atol=1e-10)


def test_gae_lambda_zero_is_one_step_td():
    rng = np.random.default_rng(2)
    rewards = rng.normal(size=6)
    values = rng.normal(size=6)
    adv, _ = compute_gae(rewards, values, 0.5, 0.9, 0.0)
    next_values = np.append(values[1:], 0.5)
    assert_allclose(adv, rewards + 0.9 * next_values - values, rtol=0, atol=1e-12)


def test_gae_lambda_one_gamma_one_is_monte_carlo_advantage():
    rng = np.random.default_rng(3)
    rewards = rng.normal(size=5)
    values = rng.normal(size=5)
    adv, ret = compute_gae(rewards, values, 0.0, 1.0, 1.0)
    tails = np.cumsum(rewards[::-1])[::-1]
    assert_allclose(adv, tails - values, rtol=0, atol=1e-12)
    assert_allclose(ret, tails, rtol=0, atol=1e-12)


@given(st.integers(1, 9), st.integers(0, 2**31 - 1))
@settings(max_examples=60, deadline=None)
def test_gae_property_recursion_equals_definition(T, seed):
    rng = np.random.default_rng(seed)
    rewards = rng.normal(size=T)
    values = rng.normal(size=T)
    adv, _ = compute_gae(rewards, values, 0.0, 0.9, 0.95)
    oadv, _ = gae_double_sum(rewards, values, 0.0, 0.9, 0.95)
    assert_allclose(adv, oadv, rtol=0, atol=1e-10)


# --- gradient checks ---------------------------------------------------------


def _make_nets(obs_dim=4, branches=(3, 2), hidden=8, layers=2, seed=5):
    rng = np.random.default_rng(seed)
    policy = PolicyNet(obs_dim, list(branches), hidden, layers, rng)
    value = ValueNet(obs_dim, hidden, layers, rng)
    return policy, value


def _make_batch(policy, obs_dim, m=6, seed=9, adv_scale=1.0, ratio_offsets=None):
    rng = np.random.default_rng(seed)
    obs = rng.normal(size=(m, obs_dim))
    actions = np.stack(
        [rng.integers(0, b, size=m) for b in policy.branch_sizes], axis=1
    ).astype(np.int64)
    logp = joint_log_prob(policy.logits(obs), actions)
    # keep the importance ratios away from the clip kinks so finite
    # differences stay valid
    offsets = ratio_offsets if ratio_offsets is not None else rng.uniform(-0.05, 0.05, size=m)
    return RolloutBatch(
        obs=obs,
        actions=actions,
        old_log_probs=logp - offsets,
        advantages=adv_scale * rng.normal(size=m),
        returns=rng.normal(size=m),
    )


def _relative_error(got, want):
    return np.linalg.norm(got - want) / max(np.linalg.norm(want), 1e-12)


def _fd_check(policy, value, batch, config):
    params = policy.parameters() + value.parameters()
    vec = parameter_vector(params)

    def f(v):
        set_parameter_vector(params, v)
        return ppo_loss(policy, value, batch, config)[0]

    grads, _ = ppo_grads(policy, value, batch, config)
    fd = numeric_gradient(f, vec.copy())
    set_parameter_vector(params, vec)
    return _relative_error(parameter_vector(grads), fd)


@pytest.mark.parametrize("branches", [(3,), (3, 2)])
def test_total_gradient_matches_finite_differences(branches):
    policy, value = _make_nets(branches=branches)
    batch = _make_batch(policy, 4)
    config = PpoConfig(batch_size=4, buffer_size=8, entropy_beta=0.005)
    assert _fd_check(policy, value, batch, config) < 1e-4


def test_policy_loss_gradient_alone_matches_finite_differences():
    policy, value = _make_nets(seed=6)
    batch = _make_batch(policy, 4, seed=10)
    config = PpoConfig(batch_size=4, buffer_size=8, entropy_beta=0.0)
    params = policy.parameters()
    vec = parameter_vector(params)

    def f(v):
        set_parameter_vector(params, v)
        return ppo_loss(policy, value, batch, config)[1]["policy_loss"]

    grads, _ = ppo_grads(policy, value, batch, config)
    fd = numeric_gradient(f, vec.copy())
    set_parameter_vector(params, vec)
    assert _relative_error(parameter_vector(grads[: len(params)]), fd) < 1e-4


def test_value_loss_gradient_alone_matches_finite_differences():
    policy, value = _make_nets(seed=7)
    batch = _make_batch(policy, 4, seed=11)
    config = PpoConfig(batch_size=4, buffer_size=8)
    vparams = value.parameters()
    vec = parameter_vector(vparams)

    def f(v):
        set_parameter_vector(vparams, v)
        return ppo_loss(policy, value, batch, config)[1]["value_loss"]

    grads, _ = ppo_grads(policy, value, batch, config)
    fd = numeric_gradient(f, vec.copy())
    set_parameter_vector(vparams, vec)
    n_policy = len(policy.parameters())
    assert _relative_error(parameter_vector(grads[n_policy:]), fd) < 1e-4


def test_entropy_gradient_alone_matches_finite_differences():
    # zero advantages silence the surrogate term, so with beta=1 the
    # policy-parameter gradient is exactly -d(entropy)/d(theta)
    policy, value = _make_nets(seed=8)
    batch = _make_batch(policy, 4, seed=12, adv_scale=0.0)
    config = PpoConfig(batch_size=4, buffer_size=8, entropy_beta=1.0)
    params = policy.parameters()
    vec = parameter_vector(params)

    def f(v):
        set_parameter_vector(params, v)
        return -ppo_loss(policy, value, batch, config)[1]["entropy"]

    grads, _ = ppo_grads(policy, value, batch, config)
    fd = numeric_gradient(f, vec.copy())
    set_parameter_vector(params, vec)
    assert _relative_error(parameter_vector(grads[: len(params)]), fd) < 1e-4


# --- clipping ----------------------------------------------------------------


def _policy_grad_norm(policy, value, batch, config):
    grads, _ = ppo_grads(policy, value, batch, config)
    return np.linalg.norm(parameter_vector(grads[: len(policy.parameters())]))


def test_clip_freezes_gradient_when_ratio_exceeds_bound_with_positive_advantage():
    policy, value = _make_nets(seed=13)
    config = PpoConfig(batch_size=4, buffer_size=8, entropy_beta=0.0, clip_epsilon=0.2)
    # ratio = exp(offset) = e ≈ 2.72 > 1.2, advantage > 0 → clipped branch,
    # which is constant in the parameters → zero policy gradient
    batch = _make_batch(policy, 4, seed=14, ratio_offsets=np.full(6, 1.0))
    batch = RolloutBatch(batch.obs, batch.actions, batch.old_log_probs,
                         np.ones(6), batch.returns)
    assert _policy_grad_norm(policy, value, batch, config) == pytest.approx(0.0, abs=1e-15)


def test_negative_advantage_keeps_gradient_alive_at_high_ratio():
    # min() picks the unclipped term when it is the worse of the two
    policy, value = _make_nets(seed=13)
    config = PpoConfig(batch_size=4, buffer_size=8, entropy_beta=0.0, clip_epsilon=0.2)
    batch = _make_batch(policy, 4, seed=14, ratio_offsets=np.full(6, 1.0))
    batch = RolloutBatch(batch.obs, batch.actions, batch.old_log_probs,
                         -np.ones(6), batch.returns)
    assert _policy_grad_norm(policy, value, batch, config) > 1e-6


def test_loss_surrogate_uses_pessimistic_minimum():
    policy, value = _make_nets(seed=15)
    config = PpoConfig(batch_size=4, buffer_size=8, entropy_beta=0.0, clip_epsilon=0.2)
    base = _make_batch(policy, 4, seed=16, ratio_offsets=np.full(6, 1.0))
    up = RolloutBatch(base.obs, base.actions, base.old_log_probs, np.ones(6), base.returns)
    down = RolloutBatch(base.obs, base.actions, base.old_log_probs, -np.ones(6), base.returns)
    # adv=+1, ratio≈e: surrogate = clipped 1.2 → policy_loss = -1.2
    assert ppo_loss(policy, value, up, config)[1]["policy_loss"] == pytest.approx(-1.2, abs=1e-9)
    # adv=-1, ratio≈e: surrogate = unclipped -e
    assert ppo_loss(policy, value, down, config)[1]["policy_loss"] == pytest.approx(np.e, rel=1e-9)


# --- sampling / log-probs ------------------------------------------------------


def test_joint_log_prob_matches_direct_product_of_branch_probs():
    policy, _ = _make_nets(branches=(3, 2), seed=17)
    rng = np.random.default_rng(18)
    obs = rng.normal(size=(10, 4))
    actions = np.stack([rng.integers(0, 3, 10), rng.integers(0, 2, 10)], axis=1)
    logits = policy.logits(obs)
    got = joint_log_prob(logits, actions)
    probs = [softmax(lg) for lg in logits]
    rows = np.arange(10)
    want = np.log(probs[0][rows, actions[:, 0]] * probs[1][rows, actions[:, 1]])
    assert_allclose(got, want, rtol=1e-10, atol=1e-12)


def test_sample_actions_shapes_determinism_and_ranges():
    policy, value = _make_nets(branches=(3, 2), seed=19)
    obs = np.random.default_rng(20).normal(size=(9, 4))
    a1, lp1, v1 = sample_actions(policy, value, obs, np.random.default_rng(7))
    a2, lp2, v2 = sample_actions(policy, value, obs, np.random.default_rng(7))
    assert a1.shape == (9, 2) and lp1.shape == (9,) and v1.shape == (9,)
    assert np.array_equal(a1, a2) and np.array_equal(lp1, lp2)
    assert np.all((a1[:, 0] >= 0) & (a1[:, 0] < 3))
    assert np.all((a1[:, 1] >= 0) & (a1[:, 1] < 2))
    assert_allclose(lp1, joint_log_prob(policy.logits(obs), a1), rtol=0, atol=0)


def test_greedy_actions_are_argmax_of_logits():
    policy, _ = _make_nets(branches=(3, 2), seed=21)
    obs = np.random.default_rng(22).normal(size=(6, 4))
    got = greedy_actions(policy, obs)
    logits = policy.logits(obs)
    assert np.array_equal(got[:, 0], logits[0].argmax(axis=-1))
    assert np.array_equal(got[:, 1], logits[1].argmax(axis=-1))


# --- buffer -------------------------------------------------------------------


def _tiny_batch(n, base):
    return RolloutBatch(
        obs=np.full((n, 2), base, dtype=np.float64),
        actions=np.full((n, 1), 1, dtype=np.int64),
        old_log_probs=np.full(n, base, dtype=np.float64),
        advantages=np.arange(n, dtype=np.float64) + base,
        returns=np.zeros(n),
    )


def test_rollout_buffer_concatenates_in_arrival_order_and_drains():
    buf = RolloutBuffer()
    assert len(buf) == 0
    buf.append(_tiny_batch(3, 0.0))
    buf.append(_tiny_batch(2, 10.0))
    assert len(buf) == 5
    merged = buf.drain()
    assert len(merged) == 5
    assert_allclose(merged.advantages, [0, 1, 2, 10, 11], rtol=0, atol=0)
    assert len(buf) == 0
    buf.append(_tiny_batch(1, 5.0))
    assert len(buf) == 1  # reusable after drain


def test_rollout_batch_slice_picks_rows():
    batch = _tiny_batch(4, 0.0)
    part = batch.slice(np.array([2, 0]))
    assert_allclose(part.advantages, [2.0, 0.0], rtol=0, atol=0)
    assert part.obs.shape == (2, 2)


# --- learner -------------------------------------------------------------------


def test_update_is_scale_invariant_under_advantage_normalization():
    def run(scale, normalize):
        policy, value = _make_nets(seed=23)
        config = PpoConfig(batch_size=4, buffer_size=8, normalize_advantages=normalize)
        learner = PpoLearner(policy, value, config)
        batch = _make_batch(policy, 4, m=8, seed=24, adv_scale=scale)
        learner.update(batch, lr=1e-3, rng=np.random.default_rng(25))
        return parameter_vector(learner.parameters())

    assert_allclose(run(1.0, True), run(1000.0, True), rtol=1e-6, atol=1e-9)
    small, big = run(1.0, False), run(1000.0, False)
    assert not np.allclose(small, big, rtol=1e-6)


def test_update_with_zero_learning_rate_leaves_parameters_unchanged():
    policy, value = _make_nets(seed=26)
    learner = PpoLearner(policy, value, PpoConfig(batch_size=4, buffer_size=8))
    before = parameter_vector(learner.parameters()).copy()
    batch = _make_batch(policy, 4, m=8, seed=27)
    stats = learner.update(batch, lr=0.0, rng=np.random.default_rng(0))
    assert_allclose(parameter_vector(learner.parameters()), before, rtol=0, atol=0)
    assert set(stats) == {"policy_loss", "value_loss", "entropy"}


def test_repeated_updates_reduce_value_loss_on_fixed_batch():
    policy, value = _make_nets(seed=28)
    config = PpoConfig(batch_size=8, buffer_size=8, num_epoch=1)
    learner = PpoLearner(policy, value, config)
    batch = _make_batch(policy, 4, m=8, seed=29)
    first = ppo_loss(policy, value, batch, config)[1]["value_loss"]
    for i in range(60):
        learner.update(batch, lr=3e-3, rng=np.random.default_rng(i))
    last = ppo_loss(policy, value, batch, config)[1]["value_loss"]
    assert last < 0.5 * first


# --- config validation -----------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        {"batch_size": 0},
        {"buffer_size": 16, "batch_size": 32},
        {"learning_rate": 0.0},
        {"clip_epsilon": 0.0},
        {"gamma": 0.0},
        {"gamma": 1.5},
        {"gae_lambda": -0.1},
        {"num_epoch": 0},
        {"time_horizon": 0},
        {"entropy_beta": -1e-9},
        {"hidden_units": 0},
    ],
)
def test_ppo_config_rejects_invalid_values(kwargs):
    with pytest.raises(ConfigError):
        PpoConfig(**kwargs)


def test_ppo_config_defaults_match_documented_training_recipe():
    c = PpoConfig()
    assert (c.batch_size, c.buffer_size) == (32, 256)
    assert c.learning_rate == pytest.approx(3e-4)
    assert c.entropy_beta == pytest.approx(0.005)
    assert c.clip_epsilon == pytest.approx(0.2)
    assert (c.gae_lambda, c.gamma) == (0.95, 0.9)
    assert (c.num_epoch, c.time_horizon) == (3, 3)
    assert (c.hidden_units, c.num_layers) == (20, 3)
