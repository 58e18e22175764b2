"""Beta posterior bookkeeping and sampling."""

import numpy as np
import pytest

from fairbandit.posterior import PosteriorState


class TestInitialization:
    def test_default_prior_is_half_half(self):
        state = PosteriorState.initial(3)
        assert np.array_equal(state.s, [0.5, 0.5, 0.5])
        assert np.array_equal(state.f, [0.5, 0.5, 0.5])
        assert np.array_equal(state.pulls, [0, 0, 0])
        assert state.k == 3

    def test_custom_prior(self):
        state = PosteriorState.initial(2, s0=1.0, f0=2.0)
        assert state.marginal_mean(0) == pytest.approx(1 / 3)

    def test_needs_two_arms(self):
        with pytest.raises(ValueError):
            PosteriorState.initial(1)

    def test_pseudo_counts_must_be_positive(self):
        with pytest.raises(ValueError):
            PosteriorState(s=np.array([0.0, 1.0]), f=np.array([1.0, 1.0]))

    def test_shapes_must_agree(self):
        with pytest.raises(ValueError):
            PosteriorState(s=np.array([1.0, 1.0]), f=np.array([1.0]))


class TestUpdates:
    def test_success_and_failure_move_one_unit(self):
        state = PosteriorState.initial(2)
        state.update(0, 1.0)
        assert state.s[0] == 1.5 and state.f[0] == 0.5 and state.pulls[0] == 1
        state.update(0, 0.0)
        assert state.s[0] == 1.5 and state.f[0] == 1.5 and state.pulls[0] == 2
        assert state.s[1] == 0.5 and state.f[1] == 0.5 and state.pulls[1] == 0

    def test_rejects_non_binary_rewards(self):
        state = PosteriorState.initial(2)
        with pytest.raises(ValueError):
            state.update(0, 0.5)
        with pytest.raises(ValueError):
            state.update(0, 2.0)

    def test_rejects_bad_arm(self):
        state = PosteriorState.initial(2)
        with pytest.raises(ValueError):
            state.update(2, 1.0)

    def test_mass_conservation_along_random_history(self):
        rng = np.random.default_rng(10)
        state = PosteriorState.initial(4)
        for _ in range(500):
            arm = int(rng.integers(4))
            state.update(arm, float(rng.integers(2)))
        assert np.allclose(state.s + state.f, 1.0 + state.pulls)

    def test_marginal_means(self):
        state = PosteriorState.initial(2)
        assert state.marginal_mean(0) == 0.5
        state.update(0, 1.0)
        assert state.marginal_mean(0) == pytest.approx(0.75)
        assert np.allclose(state.marginal_means(), [0.75, 0.5])


class TestSampling:
    def test_posterior_draws_match_beta_mean(self):
        state = PosteriorState.initial(2)
        state.update(0, 1.0)  # Beta(1.5, 0.5), mean 0.75, sd 0.25
        rng = np.random.default_rng(11)
        n = 1_000_000
        draws = state.sample_theta(0, rng, size=n)
        assert abs(draws.mean() - 0.75) <= 3 * 0.25 / np.sqrt(n)

    def test_concentrated_posterior(self):
        state = PosteriorState(s=np.array([1e6, 0.5]), f=np.array([0.5, 1e6]))
        rng = np.random.default_rng(12)
        draws = state.sample_theta(0, rng, size=10_000)
        assert (draws > 0.999).mean() > 0.99

    def test_two_stage_draw_marginalizes_to_posterior_mean(self):
        # sampling theta then a Bernoulli(theta) success has marginal
        # probability equal to the posterior mean, whatever the spread
        state = PosteriorState(s=np.array([4.0, 2.0]), f=np.array([1.0, 3.0]))
        rng = np.random.default_rng(13)
        n = 400_000
        thetas = state.sample_theta(0, rng, size=n)
        ys = rng.random(n) < thetas
        m = state.marginal_mean(0)
        assert abs(ys.mean() - m) <= 4 * np.sqrt(m * (1 - m) / n)

    def test_posterior_concentrates_on_truth(self):
        theta = 0.3
        rng = np.random.default_rng(14)
        state = PosteriorState.initial(2)
        n = 2000
        for reward in (rng.random(n) < theta).astype(float):
            state.update(0, float(reward))
        assert abs(state.marginal_mean(0) - theta) <= 4 * np.sqrt(theta * (1 - theta) / n)
