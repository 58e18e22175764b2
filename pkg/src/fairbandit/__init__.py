"""Fairness-aware Thompson sampling bandits.

Exact calibrated-fairness targets, smooth-fairness audits, budgeted
stochastic-dominance sampling (stochastic and dueling), and a seeded
simulation harness with flat-file reports.
"""

from .dueling import (
    Lemma1Probe,
    PairwiseStats,
    Rank1Estimate,
    all_pairs,
    estimate_rank1,
    fair_sd_dts_step,
    lemma1_probe,
    pl_pair_prob,
    pl_rank1_exact,
    pl_rank1_mc,
    pl_rank_prob,
    pl_rank_sample,
    pl_rank_samples,
    rank1_from_pairwise,
)
from .envs import (
    CapacityError,
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
from .fairness import (
    AuditReport,
    FairnessSpec,
    PairSlack,
    RegretTrace,
    VIOLATION_TOL,
    bernoulli_dist,
    brier_loss,
    calibrated_target,
    calibrated_target_mc,
    expected_brier_loss,
    fairness_regret_round,
    smooth_audit,
    smooth_audit_pairwise,
    tv_bernoulli,
    tv_finite,
)
from .harness import (
    ALGORITHMS,
    ExperimentConfig,
    SummaryReport,
    config_from_file,
    config_from_mapping,
    loglog_slope,
    run_experiment,
    run_replication,
)
from .policies import (
    FairSDTSConfig,
    PHASE_EXPLOITATION,
    PHASE_EXPLORATION,
    exact_sdts_rule,
    exploitation_rule,
    fair_sdts_step,
    mixed_rule,
    one_hot_rule,
    sdts_draw,
    standard_ts_draw,
    uniform_rule,
    validate_rule,
)
from .posterior import PosteriorState

__version__ = "0.1.0"
