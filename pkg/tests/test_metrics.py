import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softdmp.metrics import (EpisodeRecord, RunSummary, aggregate_trials, fmt, read_run_csv, smooth,
                             write_aggregate_csv, write_run_csv, write_summary_csv)


def summary(steps, rewards=None, collisions=None, window=3):
    rewards = rewards if rewards is not None else [0.0] * len(steps)
    collisions = collisions if collisions is not None else [0] * len(steps)
    recs = [EpisodeRecord(i, s, r, c, False) for i, (s, r, c) in enumerate(zip(steps, rewards, collisions))]
    return RunSummary(recs, window)


class TestSmooth:
    def test_hand_example(self):
        assert np.allclose(smooth([0, 10, 0], 3), [5, 10 / 3, 5])

    def test_window_one_identity(self):
        x = np.random.default_rng(0).normal(size=17)
        assert np.array_equal(smooth(x, 1), x)

    def test_constant(self):
        assert np.allclose(smooth(np.full(30, 2.5), 7), 2.5, atol=1e-12)

    def test_even_window(self):
        # window 4 covers i-1 .. i+2
        assert np.allclose(smooth([1, 2, 3, 4, 5], 4), [2, 2.5, 3.5, 4, 4.5])

    def test_window_larger_than_series(self):
        assert np.allclose(smooth([1, 2, 3], 50), [2, 2, 2])

    def test_bad_window(self):
        with pytest.raises(ValueError):
            smooth([1.0], 0)

    def test_empty(self):
        assert len(smooth([], 5)) == 0

    def test_periodic_interior_is_mean(self):
        x = np.tile([3.0, -1.0, 0.5, 7.0, 2.0], 20)
        y = smooth(x, 5)
        assert np.allclose(y[2:-2], x.mean(), atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=60), st.integers(1, 20))
    def test_matches_naive(self, xs, w):
        n = len(xs)
        naive = [np.mean(xs[max(0, i - (w - 1) // 2):min(n, i + w // 2 + 1)]) for i in range(n)]
        assert np.allclose(smooth(xs, w), naive, atol=1e-7)


class TestRecords:
    def test_invariants(self):
        with pytest.raises(ValueError):
            EpisodeRecord(0, 0, 0.0, 0, False)
        with pytest.raises(ValueError):
            EpisodeRecord(0, 3, 0.0, 4, False)

    def test_summary_rates(self):
        s = summary([10, 30], collisions=[2, 6])
        assert s.avg_step_length == 20
        assert s.collision_rate == pytest.approx(0.2)
        assert s.collisions_per_episode == 4
        assert len(s.smoothed_steps) == len(s.smoothed_reward) == 2


class TestAggregate:
    def test_single_trial(self):
        agg = aggregate_trials([summary([3, 4, 5], [1.0, 2.0, 3.0])])
        assert np.array_equal(agg.mean_steps, [3, 4, 5])
        assert not agg.se_steps.any() and not agg.se_reward.any()

    def test_identical_trials(self):
        agg = aggregate_trials([summary([3, 4]), summary([3, 4])])
        assert not agg.se_steps.any()

    def test_standard_error(self):
        agg = aggregate_trials([summary([1]), summary([3])])
        # sample sd sqrt(2), over sqrt(2) trials
        assert agg.mean_steps[0] == 2 and agg.se_steps[0] == pytest.approx(1.0)

    def test_mismatched(self):
        with pytest.raises(ValueError):
            aggregate_trials([summary([1, 2]), summary([1])])

    def test_permutation_invariant(self):
        rng = np.random.default_rng(1)
        runs = [summary(list(rng.integers(1, 50, 8)), list(rng.normal(size=8))) for _ in range(4)]
        a, b = aggregate_trials(runs), aggregate_trials(runs[::-1])
        assert np.allclose(a.mean_reward, b.mean_reward, atol=1e-14)
        assert np.allclose(a.se_steps, b.se_steps, atol=1e-14)


class TestCsv:
    def test_fmt(self):
        assert fmt(True) == "1" and fmt(np.int64(7)) == "7"
        assert fmt(1 / 3) == "0.333333333333"
        assert fmt(-0.1 * 3) == "-0.3"

    def test_run_round_trip(self, tmp_path):
        recs = [EpisodeRecord(0, 12, -0.3, 3, True), EpisodeRecord(1, 500, 0.0, 0, False)]
        write_run_csv(tmp_path / "r.csv", recs)
        assert read_run_csv(tmp_path / "r.csv") == recs
        assert (tmp_path / "r.csv").read_text().splitlines()[0] == "episode,steps,reward,collisions,goal"

    def test_aggregate_csv(self, tmp_path):
        write_aggregate_csv(tmp_path / "a.csv", aggregate_trials([summary([2, 4]), summary([4, 4])]))
        lines = (tmp_path / "a.csv").read_text().splitlines()
        assert lines[0].startswith("episode,mean_steps,se_steps,mean_collisions,se_collisions")
        assert lines[1].split(",")[:3] == ["0", "3", "1"]

    def test_summary_csv(self, tmp_path):
        write_summary_csv(tmp_path / "s.csv", [{"run": "x", "seed": 0, "rate": 0.25}])
        assert (tmp_path / "s.csv").read_text().splitlines() == ["run,seed,rate", "x,0,0.25"]
