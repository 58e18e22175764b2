"""Decision rules: stochastic-dominance Thompson sampling and variants.

A decision rule is a length-k numpy probability vector: the chance each
arm gets this round. The central object is the exact stochastic-dominance
rule, the probability each arm's simulated Bernoulli draw wins (ties
split uniformly), computed by enumerating all 2^k binary outcomes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .envs import CapacityError, categorical
from .posterior import PosteriorState

EXACT_RULE_MAX_ARMS = 20
_CACHE_MAX_ARMS = 12
_bit_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

PHASE_EXPLORATION = "exploration"
PHASE_EXPLOITATION = "exploitation"


def validate_rule(rule: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    """Check a vector is a probability distribution over arms."""
    rule = np.asarray(rule, dtype=float)
    if rule.ndim != 1 or len(rule) < 2:
        raise ValueError("a decision rule is a 1-d vector over at least 2 arms")
    if np.any(rule < -atol) or np.any(rule > 1.0 + atol):
        raise ValueError("rule entries must lie in [0, 1]")
    if abs(float(rule.sum()) - 1.0) > atol:
        raise ValueError(f"rule must sum to 1, got {rule.sum()}")
    return rule


def uniform_rule(k: int) -> np.ndarray:
    if k < 2:
        raise ValueError("need at least 2 arms")
    return np.full(k, 1.0 / k)


def one_hot_rule(k: int, arm: int) -> np.ndarray:
    if not 0 <= arm < k:
        raise ValueError(f"arm index {arm} out of range for k={k}")
    rule = np.zeros(k)
    rule[arm] = 1.0
    return rule


def _outcome_tables(k: int) -> tuple[np.ndarray, np.ndarray]:
    """Bit matrix of all 2^k binary outcomes and the per-outcome win shares.

    Row b of the share table gives each arm's probability of being played
    when the simulated draws equal that bit pattern: 1/|argmax| for the
    maximal entries (the all-zeros row splits uniformly across all arms).
    """
    idx = np.arange(1 << k, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(k)) & 1).astype(float)
    winners = bits == bits.max(axis=1, keepdims=True)
    share = winners / winners.sum(axis=1, keepdims=True)
    return bits, share


def exact_sdts_rule(means: np.ndarray, max_arms: int = EXACT_RULE_MAX_ARMS) -> np.ndarray:
    """Exact stochastic-dominance selection probabilities.

    Given per-arm Bernoulli means, returns the distribution of the winner
    when each arm draws an independent Bernoulli and the largest draw is
    played, ties split uniformly. Enumerates all 2^k outcomes, so k is
    capped; for larger k use a Monte Carlo estimate of the calibrated
    target instead.
    """
    m = np.asarray(means, dtype=float)
    if m.ndim != 1 or len(m) < 2:
        raise ValueError("means must be a 1-d vector over at least 2 arms")
    if np.any(m < 0.0) or np.any(m > 1.0):
        raise ValueError("means must lie in [0, 1]")
    k = len(m)
    if k > max_arms:
        raise CapacityError(
            f"exact enumeration needs 2^{k} outcomes (cap 2^{max_arms}); "
            "use fairness.calibrated_target_mc for a Monte Carlo estimate"
        )
    if k <= _CACHE_MAX_ARMS:
        if k not in _bit_cache:
            _bit_cache[k] = _outcome_tables(k)
        bits, share = _bit_cache[k]
        outcome_probs = np.prod(np.where(bits == 1.0, m, 1.0 - m), axis=1)
        return outcome_probs @ share
    pi = np.zeros(k)
    chunk = 1 << 16
    for start in range(0, 1 << k, chunk):
        idx = np.arange(start, min(start + chunk, 1 << k), dtype=np.int64)
        bits = ((idx[:, None] >> np.arange(k)) & 1).astype(float)
        winners = bits == bits.max(axis=1, keepdims=True)
        share = winners / winners.sum(axis=1, keepdims=True)
        outcome_probs = np.prod(np.where(bits == 1.0, m, 1.0 - m), axis=1)
        pi += outcome_probs @ share
    return pi


def sdts_draw(state: PosteriorState, rng: np.random.Generator) -> int:
    """One stochastic-dominance round: sample each arm's mean from its
    posterior, simulate a Bernoulli per arm, play the largest draw with
    uniform tie-breaking."""
    theta = rng.beta(state.s, state.f)
    draws = (rng.random(state.k) < theta).astype(float)
    winners = np.flatnonzero(draws == draws.max())
    if len(winners) == 1:
        return int(winners[0])
    return int(winners[rng.integers(len(winners))])


def standard_ts_draw(state: PosteriorState, rng: np.random.Generator) -> int:
    """Classic Thompson sampling: play the arm with the largest posterior
    sample of its mean."""
    theta = rng.beta(state.s, state.f)
    winners = np.flatnonzero(theta == theta.max())
    if len(winners) == 1:
        return int(winners[0])
    return int(winners[rng.integers(len(winners))])


def mixed_rule(rule: np.ndarray, ts_weight: float) -> np.ndarray:
    """Convex mixture of a rule with the uniform rule.

    With weight w on the base rule, pairwise rule gaps shrink by the
    factor w, so a rule that satisfies a (2, 0)-style smoothness bound
    satisfies (2w, 0) after mixing.
    """
    rule = validate_rule(rule)
    if not 0.0 <= ts_weight <= 1.0:
        raise ValueError("ts_weight must lie in [0, 1]")
    k = len(rule)
    return ts_weight * rule + (1.0 - ts_weight) / k


@dataclass(frozen=True)
class FairSDTSConfig:
    """Exploration budget and fairness knobs for the fair variants.

    divergence_bound caps the unknown max pairwise reward divergence;
    total variation never exceeds 1, so the default is safe for any
    model. budget_override substitutes an explicit per-arm (or per-pair)
    count for the derived one. epsilon1_target, when set, mixes the
    exploitation rule toward uniform with weight epsilon1_target / 2 so
    the mixed rule meets that smoothness coefficient.
    """

    epsilon2: float
    delta: float
    divergence_bound: float = 1.0
    budget_override: int | None = None
    epsilon1_target: float | None = None

    def __post_init__(self) -> None:
        if not self.epsilon2 > 0.0:
            raise ValueError("epsilon2 must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 0.0 < self.divergence_bound <= 1.0:
            raise ValueError("divergence_bound must lie in (0, 1]")
        if self.budget_override is not None and self.budget_override < 1:
            raise ValueError("budget_override must be a positive integer")
        if self.epsilon1_target is not None and not 0.0 < self.epsilon1_target <= 1.0:
            raise ValueError("epsilon1_target must lie in (0, 1]")

    def _raw_budget(self) -> float:
        b = 2.0 * self.divergence_bound + 1.0
        return b * b / (2.0 * self.epsilon2 * self.epsilon2) * math.log(2.0 / self.delta)

    def exploration_budget(self) -> int:
        """Per-arm pull count to clear before exploitation starts."""
        if self.budget_override is not None:
            return self.budget_override
        return math.ceil(self._raw_budget())

    def dueling_exploration_budget(self, k: int) -> int:
        """Per-pair duel count for the dueling variant; carries the extra
        k^2 factor of the dueling guarantee."""
        if k < 2:
            raise ValueError("need at least 2 arms")
        if self.budget_override is not None:
            return self.budget_override
        return math.ceil(k * k * self._raw_budget())

    @property
    def mixing_weight(self) -> float | None:
        if self.epsilon1_target is None:
            return None
        return self.epsilon1_target / 2.0


def exploitation_rule(state: PosteriorState, config: FairSDTSConfig | None = None) -> np.ndarray:
    """Exact stochastic-dominance rule at the posterior means, mixed
    toward uniform when the config asks for a smoothness target."""
    rule = exact_sdts_rule(state.marginal_means())
    if config is not None and config.mixing_weight is not None:
        rule = mixed_rule(rule, config.mixing_weight)
    return rule


def fair_sdts_step(
    state: PosteriorState,
    config: FairSDTSConfig,
    rng: np.random.Generator,
    pull_counts: np.ndarray | None = None,
) -> tuple[str, np.ndarray, int]:
    """One round of budgeted-exploration stochastic-dominance sampling.

    While any arm's pull count is at or below the budget, every arm is
    equally likely. Afterwards the exact stochastic-dominance rule at the
    current posterior means is emitted and the arm is drawn from it.
    Returns (phase, rule, arm).
    """
    counts = state.pulls if pull_counts is None else np.asarray(pull_counts)
    if counts.shape != (state.k,):
        raise ValueError("pull_counts must have one entry per arm")
    if np.any(counts <= config.exploration_budget()):
        rule = uniform_rule(state.k)
        return PHASE_EXPLORATION, rule, categorical(rng, rule)
    rule = exploitation_rule(state, config)
    return PHASE_EXPLOITATION, rule, categorical(rng, rule)
