"""Per-arm Beta posteriors over Bernoulli reward means.

Every arm starts from the Jeffreys prior Beta(1/2, 1/2) unless a custom
prior is supplied, and each binary observation moves exactly one unit of
mass, so s + f == s0 + f0 + pulls holds at all times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PosteriorState:
    """Success/failure pseudo-counts and pull counts for k arms."""

    s: np.ndarray
    f: np.ndarray
    pulls: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.s = np.asarray(self.s, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        if self.s.shape != self.f.shape or self.s.ndim != 1:
            raise ValueError("s and f must be 1-d arrays of equal length")
        if np.any(self.s <= 0.0) or np.any(self.f <= 0.0):
            raise ValueError("pseudo-counts must be strictly positive")
        if self.pulls is None:
            self.pulls = np.zeros(len(self.s), dtype=np.int64)
        else:
            self.pulls = np.asarray(self.pulls, dtype=np.int64)
            if self.pulls.shape != self.s.shape or np.any(self.pulls < 0):
                raise ValueError("pulls must be non-negative and match s/f in length")

    @classmethod
    def initial(cls, k: int, s0: float = 0.5, f0: float = 0.5) -> "PosteriorState":
        """Fresh state for k arms; defaults to the Jeffreys prior."""
        if k < 2:
            raise ValueError("need at least 2 arms")
        return cls(s=np.full(k, float(s0)), f=np.full(k, float(f0)))

    @property
    def k(self) -> int:
        return len(self.s)

    def update(self, arm: int, reward: float) -> None:
        """Fold one binary observation into the posterior for an arm."""
        if not 0 <= arm < self.k:
            raise ValueError(f"arm index {arm} out of range for k={self.k}")
        if reward == 1.0:
            self.s[arm] += 1.0
        elif reward == 0.0:
            self.f[arm] += 1.0
        else:
            raise ValueError(f"binary reward expected, got {reward!r}")
        self.pulls[arm] += 1

    def sample_theta(self, arm: int, rng: np.random.Generator, size: int | None = None):
        """Posterior draw(s) of arm's mean: Beta(s[arm], f[arm])."""
        if not 0 <= arm < self.k:
            raise ValueError(f"arm index {arm} out of range for k={self.k}")
        return rng.beta(self.s[arm], self.f[arm], size=size)

    def marginal_mean(self, arm: int) -> float:
        if not 0 <= arm < self.k:
            raise ValueError(f"arm index {arm} out of range for k={self.k}")
        return float(self.s[arm] / (self.s[arm] + self.f[arm]))

    def marginal_means(self) -> np.ndarray:
        """Posterior means s / (s + f) for all arms as one vector."""
        return self.s / (self.s + self.f)
