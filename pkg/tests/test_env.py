import numpy as np
import pytest

from banditlab.adversarial import Exp3State, exp_weights, importance_loss_estimate
from banditlab.env import (
    NonObliviousAdversary,
    ObliviousAdversary,
    RunTrace,
    StochasticEnv,
    derive_stream,
    lower_bound_env,
    pseudo_regret_oblivious,
    pseudo_regret_stochastic,
)


def test_sample_reward_degenerate_bernoulli():
    rng = derive_stream(1, 0)
    env = StochasticEnv.bernoulli([1.0, 0.0])
    assert env.sample_reward(0, rng) == 1.0
    assert env.sample_reward(1, rng) == 0.0


def test_sample_reward_law_of_large_numbers():
    rng = derive_stream(42, 0)
    env = StochasticEnv.bernoulli([0.3])
    draws = [env.sample_reward(0, rng) for _ in range(10**5)]
    assert abs(np.mean(draws) - 0.3) < 0.01


def test_sample_reward_out_of_range():
    env = StochasticEnv.bernoulli([0.5])
    with pytest.raises(IndexError):
        env.sample_reward(1, derive_stream(0, 0))


def test_bad_means_rejected():
    with pytest.raises(ValueError):
        StochasticEnv.bernoulli([1.2])
    with pytest.raises(ValueError):
        StochasticEnv.bernoulli([])


def test_discrete_arm():
    from banditlab.env import DiscreteArm

    arm = DiscreteArm([0.0, 0.5, 1.0], [0.2, 0.5, 0.3])
    assert arm.mean == pytest.approx(0.55)
    rng = derive_stream(21, 0)
    draws = np.array([arm.sample(rng) for _ in range(20_000)])
    assert set(np.unique(draws)).issubset({0.0, 0.5, 1.0})
    assert abs(draws.mean() - 0.55) < 0.01
    env = StochasticEnv([arm, DiscreteArm([0.25], [1.0])])
    assert env.best_arm == 0
    with pytest.raises(ValueError):
        DiscreteArm([2.0], [1.0])
    with pytest.raises(ValueError):
        DiscreteArm([0.5], [0.7])


def test_pseudo_regret_stochastic_hand_values():
    env = StochasticEnv.bernoulli([0.9, 0.5])
    trace = RunTrace(actions=[0] * 10, losses=[0.0] * 10)
    assert pseudo_regret_stochastic(trace, env) == 0.0
    trace = RunTrace(actions=[0] * 5 + [1] * 5, losses=[0.0] * 10)
    assert pseudo_regret_stochastic(trace, env) == pytest.approx(2.0)
    single = StochasticEnv.bernoulli([0.7])
    trace = RunTrace(actions=[0] * 7, losses=[0.0] * 7)
    assert pseudo_regret_stochastic(trace, single) == 0.0


def test_pseudo_regret_stochastic_nonnegative_zero_iff_optimal():
    rng = derive_stream(7, 0)
    env = StochasticEnv.bernoulli([0.2, 0.9, 0.4])
    for _ in range(50):
        actions = list(rng.integers(3, size=20))
        trace = RunTrace(actions=actions, losses=[0.0] * 20)
        value = pseudo_regret_stochastic(trace, env)
        assert value >= 0.0
        assert (value == 0.0) == all(a == env.best_arm for a in actions)


def test_pseudo_regret_oblivious_hand_values():
    adv = ObliviousAdversary(np.zeros((4, 2)))
    trace = RunTrace(actions=[0, 1, 0, 1], losses=[0.0] * 4)
    assert pseudo_regret_oblivious(trace, adv) == 0.0

    adv = ObliviousAdversary(np.array([[1.0, 0.0], [1.0, 0.0]]))
    trace = RunTrace(actions=[0, 0], losses=[1.0, 1.0])
    assert pseudo_regret_oblivious(trace, adv) == pytest.approx(2.0)
    # playing the argmin column every round leaves nothing on the table
    trace = RunTrace(actions=[1, 1], losses=[0.0, 0.0])
    assert pseudo_regret_oblivious(trace, adv) == 0.0


def test_pseudo_regret_oblivious_trace_too_long():
    adv = ObliviousAdversary(np.zeros((2, 2)))
    trace = RunTrace(actions=[0, 0, 0], losses=[0.0] * 3)
    with pytest.raises(ValueError):
        pseudo_regret_oblivious(trace, adv)


def test_lower_bound_env():
    env = lower_bound_env(3, 0.0, 1)
    assert np.allclose(env.means, 0.5)
    env = lower_bound_env(2, 0.2, 0)
    assert np.allclose(env.means, [0.6, 0.4])
    env = lower_bound_env(5, 0.3, 2)
    gaps = np.delete(env.gaps, 2)
    assert np.allclose(gaps, 0.3)
    with pytest.raises(ValueError):
        lower_bound_env(2, 1.0, 0)


def test_derive_stream_determinism_and_independence():
    a = derive_stream(123, 0).random(100)
    b = derive_stream(123, 0).random(100)
    assert np.array_equal(a, b)
    c = derive_stream(123, 1).random(100)
    assert not np.array_equal(a, c)
    draws = derive_stream(123, 5).random(10**5)
    assert abs(draws.mean() - 0.5) < 0.01


def test_non_oblivious_adversary_contract():
    # punishes whichever arm was played most so far
    def grudge(history):
        losses = np.zeros(3)
        if history:
            counts = np.bincount(history, minlength=3)
            losses[counts.argmax()] = 1.0
        return losses

    adv = NonObliviousAdversary(grudge, n_arms=3)
    assert np.array_equal(adv.loss_vector(()), np.zeros(3))
    assert adv.loss_vector((1, 1, 2))[1] == 1.0

    bad = NonObliviousAdversary(lambda h: np.array([2.0, 0.0, 0.0]), n_arms=3)
    with pytest.raises(ValueError):
        bad.loss_vector(())
    short = NonObliviousAdversary(lambda h: np.zeros(2), n_arms=3)
    with pytest.raises(ValueError):
        short.loss_vector(())


def test_gain_loss_duality_action_distributions():
    # gain-form exponential weights with the whole-vector estimate 1 - est(loss)
    # match the loss-form forecaster round by round
    rng = derive_stream(99, 0)
    K, n = 4, 200
    eta = 0.11
    loss_form = Exp3State(K, eta=eta)
    cum_gains = np.zeros(K)
    t = 0
    for _ in range(n):
        p_loss = loss_form.probs()
        p_gain = np.full(K, 1.0 / K) if t == 0 else exp_weights(eta * cum_gains)
        assert np.allclose(p_loss, p_gain, atol=1e-12)
        gains = rng.random(K)
        arm = loss_form.select(rng)
        est = importance_loss_estimate(p_loss, arm, 1.0 - gains[arm])
        loss_form.cum_losses += est
        loss_form.t += 1
        cum_gains += 1.0 - est
        t += 1


def test_trace_determinism_bytes():
    # the same (seed, stream) pair reproduces every byte of a full trace
    def run():
        rng = derive_stream(2024, 3)
        env = StochasticEnv.bernoulli([0.7, 0.4])
        policy = Exp3State(2, n=50)
        trace = RunTrace()
        for _ in range(50):
            arm = policy.select(rng)
            reward = env.sample_reward(arm, rng)
            policy.update(arm, 1.0 - reward)
            trace.record(arm, 1.0 - reward)
        return trace

    t1, t2 = run(), run()
    assert t1.actions == t2.actions
    assert t1.losses == t2.losses
    assert np.array_equal(t1.counts(2), t2.counts(2))
