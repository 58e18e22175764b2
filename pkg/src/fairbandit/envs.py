"""Reward environments, duel feedback, and replication bookkeeping.

Arms are indexed 0..k-1 throughout. Stochastic rewards come from finite
discrete distributions (Bernoulli as the common special case); dueling
feedback comes from a Plackett-Luce utility model. All randomness flows
through numpy Generators so that a (master_seed, replication) pair pins
down every draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

PROB_ATOL = 1e-12


class CapacityError(ValueError):
    """Raised when an exact enumeration would exceed its configured cap."""


def replication_rng(master_seed: int, replication: int) -> np.random.Generator:
    """Independent PCG64 stream for one replication of one experiment.

    Streams are a pure function of (master_seed, replication), so
    replications can run in any order, or in parallel, with identical
    results.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=(replication,))
    return np.random.Generator(np.random.PCG64(seq))


def categorical(rng: np.random.Generator, probs: np.ndarray) -> int:
    """Draw an index from a probability vector using a single uniform."""
    cum = np.cumsum(probs)
    u = rng.random()
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, len(probs) - 1)


def _validate_dist(support: tuple[float, ...], probs: tuple[float, ...], arm: int) -> None:
    if len(support) == 0 or len(support) != len(probs):
        raise ValueError(f"arm {arm}: support and probs must be non-empty and equal-length")
    if any(b <= a for a, b in zip(support, support[1:])):
        raise ValueError(f"arm {arm}: support values must be strictly increasing")
    if any(p < 0.0 or p > 1.0 for p in probs):
        raise ValueError(f"arm {arm}: probabilities must lie in [0, 1]")
    if not math.isclose(sum(probs), 1.0, abs_tol=1e-9, rel_tol=0.0):
        raise ValueError(f"arm {arm}: probabilities must sum to 1, got {sum(probs)}")


@dataclass(frozen=True)
class RewardModel:
    """Finite discrete reward distributions, one per arm.

    supports[i] lists the values arm i can emit (strictly increasing);
    probs[i] their probabilities. Frozen so a model can be shared across
    replications without defensive copies.
    """

    supports: tuple[tuple[float, ...], ...]
    probs: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if len(self.supports) < 2:
            raise ValueError("need at least 2 arms")
        if len(self.supports) != len(self.probs):
            raise ValueError("supports and probs must have one entry per arm")
        for arm, (sup, pr) in enumerate(zip(self.supports, self.probs)):
            _validate_dist(tuple(sup), tuple(pr), arm)

    @classmethod
    def bernoulli(cls, thetas) -> "RewardModel":
        thetas = tuple(float(t) for t in thetas)
        if any(t < 0.0 or t > 1.0 for t in thetas):
            raise ValueError("Bernoulli means must lie in [0, 1]")
        return cls(
            supports=tuple((0.0, 1.0) for _ in thetas),
            probs=tuple((1.0 - t, t) for t in thetas),
        )

    @property
    def k(self) -> int:
        return len(self.supports)

    @property
    def is_bernoulli(self) -> bool:
        return all(sup == (0.0, 1.0) for sup in self.supports)

    @property
    def bernoulli_means(self) -> tuple[float, ...]:
        if not self.is_bernoulli:
            raise ValueError("model is not Bernoulli over {0, 1}")
        return tuple(pr[1] for pr in self.probs)

    @cached_property
    def _cum_probs(self) -> tuple[np.ndarray, ...]:
        return tuple(np.cumsum(pr) for pr in self.probs)

    def means(self) -> np.ndarray:
        return np.array(
            [sum(v * p for v, p in zip(sup, pr)) for sup, pr in zip(self.supports, self.probs)]
        )

    def arm_dist(self, arm: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
        return self.supports[arm], self.probs[arm]


def sample_reward(model: RewardModel, arm: int, rng: np.random.Generator) -> float:
    """One reward draw for an arm. Consumes exactly one uniform."""
    if not 0 <= arm < model.k:
        raise ValueError(f"arm index {arm} out of range for k={model.k}")
    cum = model._cum_probs[arm]
    u = rng.random()
    idx = min(int(np.searchsorted(cum, u, side="right")), len(cum) - 1)
    return model.supports[arm][idx]


def sample_rewards(model: RewardModel, arm: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorised batch of reward draws, stream-equivalent to n single draws."""
    if not 0 <= arm < model.k:
        raise ValueError(f"arm index {arm} out of range for k={model.k}")
    cum = model._cum_probs[arm]
    u = rng.random(n)
    idx = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
    return np.asarray(model.supports[arm], dtype=float)[idx]


@dataclass(frozen=True)
class PLModel:
    """Plackett-Luce utility model for dueling/ranking feedback.

    nu[i] > 0 is arm i's utility; pairwise win probabilities are
    nu_i / (nu_i + nu_j).
    """

    nu: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.nu) < 2:
            raise ValueError("need at least 2 arms")
        if any(not (v > 0.0) or not math.isfinite(v) for v in self.nu):
            raise ValueError("utilities must be finite and strictly positive")

    @property
    def k(self) -> int:
        return len(self.nu)

    @cached_property
    def pairwise_probs(self) -> np.ndarray:
        """Matrix p[i, j] = P(i beats j); diagonal fixed at 1/2."""
        v = np.asarray(self.nu, dtype=float)
        return v[:, None] / (v[:, None] + v[None, :])


def sample_duel(model: PLModel, i: int, j: int, rng: np.random.Generator) -> int:
    """Duel outcome indicator: 1 if arm i beats arm j, else 0."""
    if i == j:
        raise ValueError("a duel needs two distinct arms")
    if not (0 <= i < model.k and 0 <= j < model.k):
        raise ValueError(f"arm pair ({i}, {j}) out of range for k={model.k}")
    p = model.nu[i] / (model.nu[i] + model.nu[j])
    return int(rng.random() < p)


def sample_duels(model: PLModel, i: int, j: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Batch of duel indicators, stream-equivalent to n single duels."""
    if i == j:
        raise ValueError("a duel needs two distinct arms")
    if not (0 <= i < model.k and 0 <= j < model.k):
        raise ValueError(f"arm pair ({i}, {j}) out of range for k={model.k}")
    p = model.nu[i] / (model.nu[i] + model.nu[j])
    return (rng.random(n) < p).astype(np.int64)


@dataclass
class RoundRecord:
    """What happened in one simulated round.

    action is an arm index for reward environments or an (i, j) pair for
    duels; reward is the observed payoff or the duel win indicator; rule
    is the full probability vector the policy committed to this round.
    """

    t: int
    phase: str
    action: int | tuple[int, int]
    reward: float
    rule: np.ndarray

    def __post_init__(self) -> None:
        if self.t < 1:
            raise ValueError("rounds are 1-indexed")
        if self.phase not in ("exploration", "exploitation"):
            raise ValueError(f"unknown phase {self.phase!r}")
        if isinstance(self.action, tuple):
            if len(self.action) != 2 or self.action[0] == self.action[1]:
                raise ValueError("duel action must name two distinct arms")


@dataclass
class History:
    """Append-only trace of rounds; enforces contiguous 1-based indexing."""

    records: list[RoundRecord] = field(default_factory=list)

    def append(self, record: RoundRecord) -> None:
        if record.t != len(self.records) + 1:
            raise ValueError(f"expected round {len(self.records) + 1}, got {record.t}")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]
