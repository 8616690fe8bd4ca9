"""Episode statistics, learning-curve smoothing and CSV output."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

FLOAT_FMT = "{:.12g}"


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT.format(float(x))


@dataclass
class EpisodeRecord:
    episode: int
    steps: int
    total_reward: float
    collisions: int
    reached_goal: bool

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("an episode has at least one step")
        if not 0 <= self.collisions <= self.steps:
            raise ValueError("collisions must lie in [0, steps]")


def smooth(series, window: int = 50) -> np.ndarray:
    """Centered moving average whose window shrinks at the boundaries.

    Point ``i`` averages ``series[i - (window-1)//2 : i + window//2 + 1]``
    clipped to the valid range.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n == 0:
        return x.copy()
    # direct window sums (no cumsum differencing, so window=1 is exact)
    sums = np.convolve(x, np.ones(window))[window // 2: window // 2 + n]
    i = np.arange(n)
    counts = np.minimum(i + window // 2 + 1, n) - np.maximum(i - (window - 1) // 2, 0)
    return sums / counts


@dataclass
class RunSummary:
    records: list
    window: int = 50
    smoothed_steps: np.ndarray = field(init=False)
    smoothed_reward: np.ndarray = field(init=False)

    def __post_init__(self):
        self.smoothed_steps = smooth(self.steps, self.window)
        self.smoothed_reward = smooth(self.rewards, self.window)

    @property
    def steps(self) -> np.ndarray:
        return np.array([r.steps for r in self.records], dtype=float)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([r.total_reward for r in self.records], dtype=float)

    @property
    def collisions(self) -> np.ndarray:
        return np.array([r.collisions for r in self.records], dtype=float)

    @property
    def avg_step_length(self) -> float:
        return float(self.steps.mean())

    @property
    def collision_rate(self) -> float:
        """Collisions per environment step over the whole run."""
        return float(self.collisions.sum() / self.steps.sum())

    @property
    def collisions_per_episode(self) -> float:
        return float(self.collisions.mean())

    @property
    def goal_rate(self) -> float:
        return float(np.mean([r.reached_goal for r in self.records]))


@dataclass
class Aggregate:
    mean_steps: np.ndarray
    se_steps: np.ndarray
    mean_collisions: np.ndarray
    se_collisions: np.ndarray
    mean_reward: np.ndarray
    se_reward: np.ndarray
    n_trials: int


def _mean_se(rows: np.ndarray):
    mean = rows.mean(axis=0)
    if rows.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, rows.std(axis=0, ddof=1) / np.sqrt(rows.shape[0])


def aggregate_trials(summaries) -> Aggregate:
    """Elementwise mean and standard error of per-episode curves across trials."""
    summaries = list(summaries)
    if not summaries:
        raise ValueError("nothing to aggregate")
    lengths = {len(s.records) for s in summaries}
    if len(lengths) != 1:
        raise ValueError(f"trials have mismatched episode counts: {sorted(lengths)}")
    steps = _mean_se(np.stack([s.steps for s in summaries]))
    coll = _mean_se(np.stack([s.collisions for s in summaries]))
    rew = _mean_se(np.stack([s.rewards for s in summaries]))
    return Aggregate(*steps, *coll, *rew, n_trials=len(summaries))


def write_run_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "steps", "reward", "collisions", "goal"])
        for r in records:
            w.writerow([fmt(r.episode), fmt(r.steps), fmt(r.total_reward), fmt(r.collisions),
                        fmt(r.reached_goal)])


def read_run_csv(path) -> list:
    with open(path, newline="") as fh:
        return [EpisodeRecord(int(row["episode"]), int(row["steps"]), float(row["reward"]),
                              int(row["collisions"]), bool(int(row["goal"])))
                for row in csv.DictReader(fh)]


def write_aggregate_csv(path, agg: Aggregate) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["episode", "mean_steps", "se_steps", "mean_collisions", "se_collisions",
                    "mean_reward", "se_reward"])
        for i in range(len(agg.mean_steps)):
            w.writerow([i, fmt(agg.mean_steps[i]), fmt(agg.se_steps[i]), fmt(agg.mean_collisions[i]),
                        fmt(agg.se_collisions[i]), fmt(agg.mean_reward[i]), fmt(agg.se_reward[i])])


def write_summary_csv(path, rows: list[dict]) -> None:
    """One row per (method, seed) with scalar run metrics."""
    if not rows:
        return
    keys = list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for row in rows:
            w.writerow([row[k] if isinstance(row[k], str) else fmt(row[k]) for k in keys])
