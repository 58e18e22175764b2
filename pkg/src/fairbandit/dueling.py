"""Dueling bandit layer: Plackett-Luce model math, pairwise win-rate
statistics, the rank-one estimator they feed, and the budgeted dueling
policy built on top.

Under Plackett-Luce with utilities nu, arm i beats arm j with probability
nu_i / (nu_i + nu_j), and the chance of topping a full ranking is
nu_i / sum(nu). Inverting observed win rates recovers utility ratios, so
pairwise duel counts suffice to estimate the rank-one distribution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .envs import PLModel, categorical
from .policies import (
    PHASE_EXPLOITATION,
    PHASE_EXPLORATION,
    FairSDTSConfig,
    mixed_rule,
    uniform_rule,
)


def all_pairs(k: int) -> tuple[tuple[int, int], ...]:
    """Unordered arm pairs (i, j) with i < j, in lexicographic order."""
    return tuple((i, j) for i in range(k) for j in range(i + 1, k))


def pl_pair_prob(model: PLModel, i: int, j: int) -> float:
    """Probability that arm i beats arm j in one duel."""
    if i == j:
        raise ValueError("a duel needs two distinct arms")
    if not (0 <= i < model.k and 0 <= j < model.k):
        raise ValueError(f"arm pair ({i}, {j}) out of range for k={model.k}")
    return model.nu[i] / (model.nu[i] + model.nu[j])


def pl_rank_prob(model: PLModel, ranking) -> float:
    """Probability of observing a complete ranking (best first): product
    of each arm's utility share among the arms still unranked."""
    order = list(ranking)
    if sorted(order) != list(range(model.k)):
        raise ValueError("ranking must be a permutation of all arm indices")
    nu = model.nu
    prob = 1.0
    for pos in range(model.k):
        prob *= nu[order[pos]] / sum(nu[a] for a in order[pos:])
    return prob


def pl_rank_sample(model: PLModel, rng: np.random.Generator) -> np.ndarray:
    """One full ranking draw (best first) via the Gumbel-max trick: add
    i.i.d. Gumbel noise to log-utilities and sort descending."""
    scores = np.log(np.asarray(model.nu, dtype=float)) + rng.gumbel(size=model.k)
    return np.argsort(-scores, kind="stable")


def pl_rank_samples(model: PLModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Batch of n rankings, stream-equivalent to n single draws."""
    scores = np.log(np.asarray(model.nu, dtype=float)) + rng.gumbel(size=(n, model.k))
    return np.argsort(-scores, axis=1, kind="stable")


def pl_rank1_exact(model: PLModel) -> np.ndarray:
    """Exact distribution of the top-ranked arm: nu / sum(nu)."""
    nu = np.asarray(model.nu, dtype=float)
    return nu / nu.sum()


def pl_rank1_mc(
    model: PLModel, n_samples: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo estimate of the rank-one distribution with standard
    errors, from first elements of sampled rankings."""
    if n_samples < 2:
        raise ValueError("need at least 2 samples for a standard error")
    k = model.k
    counts = np.zeros(k)
    chunk = 1 << 17
    remaining = n_samples
    while remaining > 0:
        n = min(chunk, remaining)
        first = pl_rank_samples(model, n, rng)[:, 0]
        counts += np.bincount(first, minlength=k)
        remaining -= n
    p = counts / n_samples
    stderr = np.sqrt(p * (1.0 - p) / n_samples)
    return p, stderr


@dataclass
class PairwiseStats:
    """Duel tallies: wins[i, j] counts duels between i and j won by i.

    Pair counts n[i, j] = wins[i, j] + wins[j, i] are symmetric by
    construction; win rates are wins[i, j] / n[i, j].
    """

    k: int
    wins: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError("need at least 2 arms")
        if self.wins is None:
            self.wins = np.zeros((self.k, self.k), dtype=np.int64)
        else:
            self.wins = np.asarray(self.wins, dtype=np.int64)
            if self.wins.shape != (self.k, self.k) or np.any(self.wins < 0):
                raise ValueError("wins must be a non-negative k x k matrix")
            if np.any(np.diag(self.wins) != 0):
                raise ValueError("an arm cannot duel itself")

    def update(self, i: int, j: int, outcome: int) -> None:
        """Record one duel between i and j; outcome 1 means i won."""
        if i == j:
            raise ValueError("a duel needs two distinct arms")
        if not (0 <= i < self.k and 0 <= j < self.k):
            raise ValueError(f"arm pair ({i}, {j}) out of range for k={self.k}")
        if outcome == 1:
            self.wins[i, j] += 1
        elif outcome == 0:
            self.wins[j, i] += 1
        else:
            raise ValueError(f"duel outcome must be 0 or 1, got {outcome!r}")

    @property
    def counts(self) -> np.ndarray:
        return self.wins + self.wins.T

    def pair_count(self, i: int, j: int) -> int:
        return int(self.wins[i, j] + self.wins[j, i])

    def min_pair_count(self) -> int:
        n = self.counts
        return int(min(n[i, j] for i, j in all_pairs(self.k)))

    def win_rate(self, i: int, j: int) -> float:
        """Raw empirical probability that i beats j; needs >= 1 duel."""
        n = self.pair_count(i, j)
        if n == 0:
            raise ValueError(f"no duels recorded for pair ({i}, {j})")
        return float(self.wins[i, j]) / n

    def clamped_win_rate(self, i: int, j: int) -> float:
        """Win rate clamped to [1/(n+2), 1 - 1/(n+2)] so downstream ratio
        inversions stay finite."""
        n = self.pair_count(i, j)
        lo = 1.0 / (n + 2)
        return min(max(self.win_rate(i, j), lo), 1.0 - lo)

    def clamped_matrix(self) -> np.ndarray:
        """Clamped win rates for all observed pairs; unobserved pairs and
        the diagonal sit at 1/2 (zero divergence, no ratio information)."""
        p = np.full((self.k, self.k), 0.5)
        n = self.counts
        for i, j in all_pairs(self.k):
            if n[i, j] > 0:
                p[i, j] = self.clamped_win_rate(i, j)
                p[j, i] = 1.0 - p[i, j]
        return p


def rank1_from_pairwise(p: np.ndarray) -> np.ndarray:
    """Rank-one distribution implied by a pairwise win-probability matrix.

    Each off-diagonal (i, j) contributes the utility ratio estimate
    (1 - p[i, j]) / p[i, j]; arm i's share is 1 / (1 + sum of ratios),
    renormalized so the vector sums to one.
    """
    p = np.asarray(p, dtype=float)
    k = p.shape[0]
    if p.ndim != 2 or p.shape != (k, k) or k < 2:
        raise ValueError("need a square matrix over at least 2 arms")
    off = ~np.eye(k, dtype=bool)
    if np.any(p[off] <= 0.0) or np.any(p[off] >= 1.0):
        raise ValueError("off-diagonal win probabilities must lie in (0, 1)")
    if not np.allclose(p[off] + p.T[off], 1.0, atol=1e-9):
        raise ValueError("win probabilities must satisfy p[i,j] + p[j,i] = 1")
    ratios = (1.0 - p) / p
    np.fill_diagonal(ratios, 0.0)
    raw = 1.0 / (1.0 + ratios.sum(axis=1))
    return raw / raw.sum()


@dataclass(frozen=True)
class Rank1Estimate:
    """Estimated rank-one distribution; clamped notes whether any win rate
    had to be pulled off the boundary."""

    probs: np.ndarray
    clamped: bool


def estimate_rank1(stats: PairwiseStats) -> Rank1Estimate:
    """Rank-one distribution estimated from duel statistics.

    Requires at least one duel per pair. Win rates are clamped away from
    {0, 1} before ratio inversion; the result is renormalized.
    """
    n = stats.counts
    for i, j in all_pairs(stats.k):
        if n[i, j] == 0:
            raise ValueError(f"no duels recorded for pair ({i}, {j})")
    clamped = False
    p = np.full((stats.k, stats.k), 0.5)
    for i, j in all_pairs(stats.k):
        raw = stats.win_rate(i, j)
        cl = stats.clamped_win_rate(i, j)
        clamped = clamped or cl != raw
        p[i, j] = cl
        p[j, i] = 1.0 - cl
    return Rank1Estimate(probs=rank1_from_pairwise(p), clamped=clamped)


def fair_sd_dts_step(
    stats: PairwiseStats,
    config: FairSDTSConfig,
    rng: np.random.Generator,
) -> tuple[str, np.ndarray, tuple[int, int]]:
    """One round of the budgeted dueling policy.

    While any unordered pair is at or below the dueling budget, all pairs
    are equally likely (each arm then appears with probability 2/k, so
    the emitted per-arm rule is uniform). Afterwards the rule is the
    estimated rank-one distribution; the first arm is drawn from it and
    the opponent from the rule renormalized over the remaining arms.
    Returns (phase, rule, (first, second)).
    """
    k = stats.k
    pairs = all_pairs(k)
    budget = config.dueling_exploration_budget(k)
    if stats.min_pair_count() <= budget:
        rule = uniform_rule(k)
        pair = pairs[int(rng.integers(len(pairs)))]
        return PHASE_EXPLORATION, rule, pair
    rule = estimate_rank1(stats).probs
    if config.mixing_weight is not None:
        rule = mixed_rule(rule, config.mixing_weight)
    first = categorical(rng, rule)
    rest = rule.copy()
    rest[first] = 0.0
    rest = rest / rest.sum()
    second = categorical(rng, rest)
    return PHASE_EXPLOITATION, rule, (first, second)


@dataclass(frozen=True)
class Lemma1Probe:
    """Numerical probe of estimator sensitivity to win-rate perturbation."""

    epsilon: float
    trials: int
    max_deviation: float
    fitted_constant: float


def lemma1_probe(
    model: PLModel, epsilon: float, trials: int, rng: np.random.Generator
) -> Lemma1Probe:
    """Measure how far rank-one estimates drift when every pairwise win
    probability is perturbed by at most epsilon.

    Perturbations are uniform on [-epsilon, epsilon], applied to each
    unordered pair with complements kept consistent. fitted_constant is
    the worst observed deviation divided by k * epsilon, the scale the
    estimator's error bound predicts.
    """
    if not 0.0 <= epsilon <= 0.01:
        raise ValueError("probe expects a small perturbation, epsilon in [0, 0.01]")
    if trials < 1:
        raise ValueError("need at least one trial")
    if any(v < 0.5 or v > 2.0 for v in model.nu):
        raise ValueError("probe expects utilities within [1/2, 2]")
    k = model.k
    truth = pl_rank1_exact(model)
    exact_p = model.pairwise_probs
    pairs = all_pairs(k)
    max_dev = 0.0
    for _ in range(trials):
        p = exact_p.copy()
        noise = rng.uniform(-epsilon, epsilon, size=len(pairs))
        for (i, j), u in zip(pairs, noise):
            p[i, j] = exact_p[i, j] + u
            p[j, i] = 1.0 - p[i, j]
        est = rank1_from_pairwise(p)
        max_dev = max(max_dev, float(np.abs(est - truth).max()))
    constant = max_dev / (k * epsilon) if epsilon > 0.0 else 0.0
    return Lemma1Probe(
        epsilon=epsilon, trials=trials, max_deviation=max_dev, fitted_constant=constant
    )


def enumerate_rankings(k: int):
    """All k! complete rankings; pl_rank_prob sums to one over these."""
    return itertools.permutations(range(k))
