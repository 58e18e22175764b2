"""Calibrated-fairness targets, smooth-fairness audits, and fairness regret.

The calibrated target P*(a) is the probability that arm a's reward draw
is the (tie-split) maximum across arms. Smooth fairness compares rule
gaps |pi(i) - pi(j)| against eps1 * TV(r_i, r_j) + eps2. Fairness regret
charges each arm's probability deficit against its calibrated share.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .envs import CapacityError, RewardModel
from .policies import validate_rule

VIOLATION_TOL = 1e-9
ORACLE_MAX_OUTCOMES = 1 << 20

Dist = tuple[tuple[float, ...], tuple[float, ...]]


def bernoulli_dist(p: float) -> Dist:
    if not 0.0 <= p <= 1.0:
        raise ValueError("Bernoulli parameter must lie in [0, 1]")
    return ((0.0, 1.0), (1.0 - p, float(p)))


def tv_bernoulli(p: float, q: float) -> float:
    """Total variation distance between Bernoulli(p) and Bernoulli(q)."""
    if not (0.0 <= p <= 1.0 and 0.0 <= q <= 1.0):
        raise ValueError("Bernoulli parameters must lie in [0, 1]")
    return abs(p - q)


def tv_finite(dist_i: Dist, dist_j: Dist) -> float:
    """Total variation distance between two finite discrete distributions,
    half the L1 gap over the merged support."""
    sup_i, pr_i = dist_i
    sup_j, pr_j = dist_j
    mass_i = dict(zip(sup_i, pr_i))
    mass_j = dict(zip(sup_j, pr_j))
    values = set(mass_i) | set(mass_j)
    return 0.5 * sum(abs(mass_i.get(v, 0.0) - mass_j.get(v, 0.0)) for v in values)


@dataclass(frozen=True)
class FairnessSpec:
    """Smoothness coefficients (eps1, eps2) and confidence level delta."""

    epsilon1: float
    epsilon2: float
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.epsilon1 < 0.0 or self.epsilon2 < 0.0:
            raise ValueError("epsilon1 and epsilon2 must be non-negative")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")


def calibrated_target(model: RewardModel, max_outcomes: int = ORACLE_MAX_OUTCOMES) -> np.ndarray:
    """Exact calibrated-fairness target by joint-outcome enumeration.

    Walks the product of per-arm supports, crediting each outcome's
    probability to the maximal arm(s), ties split evenly. The product of
    support sizes is capped; past the cap use calibrated_target_mc.
    """
    total = 1
    for sup in model.supports:
        total *= len(sup)
        if total > max_outcomes:
            raise CapacityError(
                f"joint support exceeds {max_outcomes} outcomes; "
                "use calibrated_target_mc for a Monte Carlo estimate"
            )
    k = model.k
    target = np.zeros(k)
    arm_atoms = [
        tuple(zip(sup, pr)) for sup, pr in zip(model.supports, model.probs)
    ]
    for combo in itertools.product(*arm_atoms):
        prob = 1.0
        for _, p in combo:
            prob *= p
        if prob == 0.0:
            continue
        best = max(v for v, _ in combo)
        winners = [a for a, (v, _) in enumerate(combo) if v == best]
        share = prob / len(winners)
        for a in winners:
            target[a] += share
    return target


def calibrated_target_mc(
    model: RewardModel, n_samples: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo estimate of the calibrated target with standard errors.

    Each sample draws one reward per arm and splits a unit of credit
    across the maximal arms, matching the enumeration's tie handling.
    """
    if n_samples < 2:
        raise ValueError("need at least 2 samples for a standard error")
    k = model.k
    supports = [np.asarray(sup, dtype=float) for sup in model.supports]
    cums = [np.cumsum(pr) for pr in model.probs]
    total = np.zeros(k)
    total_sq = np.zeros(k)
    chunk = 1 << 17
    remaining = n_samples
    while remaining > 0:
        n = min(chunk, remaining)
        vals = np.empty((n, k))
        for a in range(k):
            u = rng.random(n)
            idx = np.minimum(np.searchsorted(cums[a], u, side="right"), len(cums[a]) - 1)
            vals[:, a] = supports[a][idx]
        winners = vals == vals.max(axis=1, keepdims=True)
        credit = winners / winners.sum(axis=1, keepdims=True)
        total += credit.sum(axis=0)
        total_sq += (credit * credit).sum(axis=0)
        remaining -= n
    mean = total / n_samples
    var = np.maximum(total_sq - n_samples * mean * mean, 0.0) / (n_samples - 1)
    stderr = np.sqrt(var / n_samples)
    return mean, stderr


def fairness_regret_round(rule: np.ndarray, target: np.ndarray) -> float:
    """One round of fairness regret: total probability deficit of the rule
    against the calibrated target (surpluses do not offset)."""
    rule = validate_rule(rule)
    target = validate_rule(target)
    if len(rule) != len(target):
        raise ValueError("rule and target must cover the same arms")
    return float(np.maximum(target - rule, 0.0).sum())


@dataclass(frozen=True)
class PairSlack:
    """Audit outcome for one arm pair: slack = bound - gap; negative slack
    beyond the tolerance is a violation."""

    i: int
    j: int
    divergence: float
    gap: float
    slack: float

    @property
    def violation(self) -> bool:
        return self.slack < -VIOLATION_TOL


@dataclass(frozen=True)
class AuditReport:
    pairs: tuple[PairSlack, ...]

    @property
    def any_violation(self) -> bool:
        return any(p.violation for p in self.pairs)

    @property
    def worst_slack(self) -> float:
        return min(p.slack for p in self.pairs)

    @property
    def violations(self) -> tuple[PairSlack, ...]:
        return tuple(p for p in self.pairs if p.violation)


def smooth_audit_pairwise(
    rule: np.ndarray, divergences: np.ndarray, spec: FairnessSpec
) -> AuditReport:
    """Audit a rule against precomputed pairwise reward divergences.

    divergences is a symmetric k x k matrix; entry (i, j) bounds how far
    apart the rule may place arms i and j after scaling by eps1.
    """
    rule = validate_rule(rule)
    k = len(rule)
    divergences = np.asarray(divergences, dtype=float)
    if divergences.shape != (k, k):
        raise ValueError("divergence matrix must be k x k")
    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            d = float(divergences[i, j])
            gap = abs(float(rule[i]) - float(rule[j]))
            slack = spec.epsilon1 * d + spec.epsilon2 - gap
            pairs.append(PairSlack(i=i, j=j, divergence=d, gap=gap, slack=slack))
    return AuditReport(pairs=tuple(pairs))


def smooth_audit(rule: np.ndarray, reward_dists, spec: FairnessSpec) -> AuditReport:
    """Smooth-fairness audit of one decision rule.

    reward_dists is one (support, probs) pair per arm: true distributions
    for the objective audit, posterior marginals for the subjective one.
    """
    rule = validate_rule(rule)
    k = len(rule)
    if len(reward_dists) != k:
        raise ValueError("need one reward distribution per arm")
    div = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            div[i, j] = div[j, i] = tv_finite(reward_dists[i], reward_dists[j])
    return smooth_audit_pairwise(rule, div, spec)


def brier_loss(rule: np.ndarray, best_arm: int) -> float:
    """Quadratic (Brier) loss of a rule against the realized best arm."""
    rule = validate_rule(rule)
    if not 0 <= best_arm < len(rule):
        raise ValueError(f"arm index {best_arm} out of range for k={len(rule)}")
    onehot = np.zeros(len(rule))
    onehot[best_arm] = 1.0
    return float(((rule - onehot) ** 2).sum())


def expected_brier_loss(rule: np.ndarray, target: np.ndarray) -> float:
    """Expected Brier loss when the best arm is drawn from the target;
    uniquely minimized at rule = target."""
    rule = validate_rule(rule)
    target = validate_rule(target)
    if len(rule) != len(target):
        raise ValueError("rule and target must cover the same arms")
    return float(sum(target[i] * brier_loss(rule, i) for i in range(len(rule))))


@dataclass
class RegretTrace:
    """Per-replication record of fairness regret and audit slacks.

    objective_slack / subjective_slack hold one row per round and one
    column per unordered arm pair (order given by pairs); subjective is
    None when the algorithm keeps no belief state to audit.
    """

    regret: np.ndarray
    cumulative: np.ndarray
    pairs: tuple[tuple[int, int], ...]
    objective_slack: np.ndarray
    subjective_slack: np.ndarray | None = None
    exploration_rounds: int = 0

    def __post_init__(self) -> None:
        t = len(self.regret)
        if len(self.cumulative) != t:
            raise ValueError("regret and cumulative must have equal length")
        if self.objective_slack.shape != (t, len(self.pairs)):
            raise ValueError("objective_slack must be (rounds, pairs)")
        if self.subjective_slack is not None and self.subjective_slack.shape != (
            t,
            len(self.pairs),
        ):
            raise ValueError("subjective_slack must be (rounds, pairs)")
        if not 0 <= self.exploration_rounds <= t:
            raise ValueError("exploration_rounds out of range")

    @property
    def horizon(self) -> int:
        return len(self.regret)

    @property
    def final_regret(self) -> float:
        return float(self.cumulative[-1])

    def worst_violation_per_round(self) -> np.ndarray:
        """Per round, the largest (gap - bound) across pairs and across the
        recorded audits; <= 0 means the round was compliant."""
        worst = -self.objective_slack.min(axis=1)
        if self.subjective_slack is not None:
            worst = np.maximum(worst, -self.subjective_slack.min(axis=1))
        return worst

    @property
    def objective_violated(self) -> bool:
        return bool((self.objective_slack < -VIOLATION_TOL).any())

    @property
    def subjective_violated(self) -> bool | None:
        if self.subjective_slack is None:
            return None
        return bool((self.subjective_slack < -VIOLATION_TOL).any())
