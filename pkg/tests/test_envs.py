"""Reward environments, dueling feedback, and replication plumbing."""

import numpy as np
import pytest

from fairbandit.envs import (
    History,
    PLModel,
    RewardModel,
    RoundRecord,
    categorical,
    replication_rng,
    sample_duel,
    sample_duels,
    sample_reward,
    sample_rewards,
)


class TestRewardModel:
    def test_bernoulli_constructor(self):
        model = RewardModel.bernoulli([0.9, 0.5, 0.4])
        assert model.k == 3
        assert model.is_bernoulli
        assert model.bernoulli_means == (0.9, 0.5, 0.4)
        assert model.probs[0] == (pytest.approx(0.1), 0.9)

    def test_mixed_support_model(self):
        model = RewardModel(supports=((1.0,), (0.0, 2.0)), probs=((1.0,), (0.6, 0.4)))
        assert not model.is_bernoulli
        assert model.means() == pytest.approx([1.0, 0.8])
        with pytest.raises(ValueError):
            model.bernoulli_means

    def test_needs_two_arms(self):
        with pytest.raises(ValueError):
            RewardModel(supports=((0.0, 1.0),), probs=((0.5, 0.5),))

    def test_probs_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            RewardModel(
                supports=((0.0, 1.0), (0.0, 1.0)), probs=((0.5, 0.6), (0.5, 0.5))
            )

    def test_probs_must_lie_in_unit_interval(self):
        with pytest.raises(ValueError, match="\\[0, 1\\]"):
            RewardModel(
                supports=((0.0, 1.0), (0.0, 1.0)), probs=((-0.1, 1.1), (0.5, 0.5))
            )

    def test_support_strictly_increasing(self):
        with pytest.raises(ValueError, match="increasing"):
            RewardModel(
                supports=((1.0, 0.0), (0.0, 1.0)), probs=((0.5, 0.5), (0.5, 0.5))
            )

    def test_support_and_probs_lengths_match(self):
        with pytest.raises(ValueError):
            RewardModel(supports=((0.0, 1.0), (0.0,)), probs=((0.5, 0.5), (0.6, 0.4)))

    def test_bernoulli_mean_out_of_range(self):
        with pytest.raises(ValueError):
            RewardModel.bernoulli([0.5, 1.2])


class TestRewardSampling:
    def test_degenerate_arms(self):
        model = RewardModel.bernoulli([1.0, 0.0])
        rng = np.random.default_rng(0)
        assert all(sample_reward(model, 0, rng) == 1.0 for _ in range(200))
        assert all(sample_reward(model, 1, rng) == 0.0 for _ in range(200))

    def test_point_mass_arm(self):
        model = RewardModel(supports=((5.0,), (0.0, 1.0)), probs=((1.0,), (0.5, 0.5)))
        rng = np.random.default_rng(1)
        assert sample_reward(model, 0, rng) == 5.0

    def test_mixed_support_mean_at_one_million_draws(self):
        # arm paying 0 w.p. 0.6 and 2 w.p. 0.4 has mean 0.8 and variance 0.96
        model = RewardModel(supports=((1.0,), (0.0, 2.0)), probs=((1.0,), (0.6, 0.4)))
        rng = np.random.default_rng(2)
        n = 1_000_000
        draws = sample_rewards(model, 1, n, rng)
        se = np.sqrt(0.96 / n)
        assert abs(draws.mean() - 0.8) <= 3 * se

    def test_support_point_frequencies(self):
        model = RewardModel(
            supports=((0.0, 1.0, 3.0), (0.0, 1.0)), probs=((0.2, 0.5, 0.3), (0.5, 0.5))
        )
        rng = np.random.default_rng(3)
        n = 1_000_000
        draws = sample_rewards(model, 0, n, rng)
        for value, prob in zip((0.0, 1.0, 3.0), (0.2, 0.5, 0.3)):
            freq = (draws == value).mean()
            assert abs(freq - prob) <= 4 * np.sqrt(prob * (1 - prob) / n)

    def test_batch_matches_single_draws(self):
        model = RewardModel(
            supports=((0.0, 1.0, 3.0), (0.0, 1.0)), probs=((0.2, 0.5, 0.3), (0.5, 0.5))
        )
        batch = sample_rewards(model, 0, 64, np.random.default_rng(4))
        rng = np.random.default_rng(4)
        singles = [sample_reward(model, 0, rng) for _ in range(64)]
        assert np.array_equal(batch, singles)

    def test_arm_index_validated(self):
        model = RewardModel.bernoulli([0.5, 0.5])
        with pytest.raises(ValueError):
            sample_reward(model, 2, np.random.default_rng(0))


class TestPLModel:
    def test_utilities_validated(self):
        with pytest.raises(ValueError):
            PLModel(nu=(1.0,))
        with pytest.raises(ValueError):
            PLModel(nu=(1.0, 0.0))
        with pytest.raises(ValueError):
            PLModel(nu=(1.0, -2.0))

    def test_pairwise_probs_matrix(self):
        model = PLModel(nu=(2.0, 1.0, 1.0))
        pm = model.pairwise_probs
        assert pm[0, 1] == pytest.approx(2 / 3)
        assert pm[1, 0] == pytest.approx(1 / 3)
        assert np.allclose(pm + pm.T, 1.0)

    def test_duel_win_frequency(self):
        model = PLModel(nu=(2.0, 1.0))
        rng = np.random.default_rng(5)
        n = 1_000_000
        wins = sample_duels(model, 0, 1, n, rng)
        p = 2 / 3
        assert abs(wins.mean() - p) <= 4 * np.sqrt(p * (1 - p) / n)

    def test_duel_batch_matches_single(self):
        model = PLModel(nu=(1.0, 3.0))
        batch = sample_duels(model, 0, 1, 50, np.random.default_rng(6))
        rng = np.random.default_rng(6)
        singles = [sample_duel(model, 0, 1, rng) for _ in range(50)]
        assert np.array_equal(batch, singles)

    def test_duel_needs_distinct_valid_arms(self):
        model = PLModel(nu=(1.0, 1.0))
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_duel(model, 1, 1, rng)
        with pytest.raises(ValueError):
            sample_duel(model, 0, 2, rng)


class TestReplicationStreams:
    def test_same_seed_and_index_reproduce(self):
        a = replication_rng(42, 3).random(16)
        b = replication_rng(42, 3).random(16)
        assert np.array_equal(a, b)

    def test_indices_give_distinct_streams(self):
        a = replication_rng(42, 0).random(16)
        b = replication_rng(42, 1).random(16)
        assert not np.array_equal(a, b)

    def test_master_seeds_give_distinct_streams(self):
        a = replication_rng(1, 0).random(16)
        b = replication_rng(2, 0).random(16)
        assert not np.array_equal(a, b)


class TestCategorical:
    def test_zero_probability_atoms_never_drawn(self):
        rng = np.random.default_rng(7)
        probs = np.array([0.0, 1.0])
        assert all(categorical(rng, probs) == 1 for _ in range(500))
        probs = np.array([1.0, 0.0])
        assert all(categorical(rng, probs) == 0 for _ in range(500))

    def test_frequencies_match_probabilities(self):
        rng = np.random.default_rng(8)
        probs = np.array([0.2, 0.3, 0.5])
        n = 30_000
        counts = np.bincount([categorical(rng, probs) for _ in range(n)], minlength=3)
        for c, p in zip(counts, probs):
            assert abs(c / n - p) <= 4 * np.sqrt(p * (1 - p) / n)


class TestRecords:
    def test_round_record_validation(self):
        rule = np.array([0.5, 0.5])
        with pytest.raises(ValueError):
            RoundRecord(t=0, phase="exploration", action=0, reward=1.0, rule=rule)
        with pytest.raises(ValueError):
            RoundRecord(t=1, phase="warmup", action=0, reward=1.0, rule=rule)
        with pytest.raises(ValueError):
            RoundRecord(t=1, phase="exploration", action=(1, 1), reward=1.0, rule=rule)

    def test_history_enforces_contiguous_rounds(self):
        rule = np.array([0.5, 0.5])
        history = History()
        history.append(RoundRecord(t=1, phase="exploration", action=0, reward=0.0, rule=rule))
        with pytest.raises(ValueError):
            history.append(
                RoundRecord(t=3, phase="exploration", action=1, reward=0.0, rule=rule)
            )
        history.append(RoundRecord(t=2, phase="exploration", action=1, reward=1.0, rule=rule))
        assert len(history) == 2
        assert history[1].action == 1
