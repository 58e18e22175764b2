"""Seeded experiment harness: config parsing, replication loops, and
cross-replication aggregation.

Each replication owns a random stream derived from (master_seed, index),
so replications are order-independent and the whole experiment is
reproducible bit for bit. Per round the harness records the emitted
rule, fairness regret against the true-model calibrated target, and
smooth-audit slacks against both the true distributions (objective) and
the learner's current beliefs (subjective).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import reports
from .dueling import PairwiseStats, all_pairs, fair_sd_dts_step, pl_rank1_exact
from .envs import (
    History,
    PLModel,
    RewardModel,
    RoundRecord,
    categorical,
    replication_rng,
    sample_duel,
    sample_reward,
)
from .fairness import (
    FairnessSpec,
    RegretTrace,
    calibrated_target,
    tv_finite,
)
from .policies import (
    PHASE_EXPLOITATION,
    PHASE_EXPLORATION,
    FairSDTSConfig,
    exact_sdts_rule,
    fair_sdts_step,
    mixed_rule,
    one_hot_rule,
    standard_ts_draw,
    uniform_rule,
)
from .posterior import PosteriorState

ALGORITHMS = ("sdts", "fair_sdts", "fair_sd_dts", "standard_ts", "uniform")
_POSTERIOR_ALGS = frozenset({"sdts", "fair_sdts", "standard_ts"})
_FAIR_ALGS = frozenset({"fair_sdts", "fair_sd_dts"})
_MIXING_ALGS = frozenset({"sdts", "fair_sdts", "fair_sd_dts"})


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs: algorithm, environment, horizon,
    replication count, seed, fairness knobs, and audit coefficients.

    audit_epsilon2 defaults to twice epsilon2 for the budgeted fair
    algorithms (their guaranteed slack) and to 0 otherwise.
    """

    algorithm: str
    horizon: int
    replications: int
    master_seed: int = 0
    reward_model: RewardModel | None = None
    pl_model: PLModel | None = None
    epsilon2: float | None = None
    delta: float | None = None
    divergence_bound: float = 1.0
    budget_override: int | None = None
    epsilon1_target: float | None = None
    audit_epsilon1: float = 2.0
    audit_epsilon2: float | None = None
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}"
            )
        if self.horizon < 1 or self.replications < 1:
            raise ValueError("horizon and replications must be at least 1")
        if self.algorithm == "fair_sd_dts":
            if self.pl_model is None:
                raise ValueError("fair_sd_dts needs a Plackett-Luce environment (nu)")
            if self.reward_model is not None:
                raise ValueError("fair_sd_dts takes no reward model")
        else:
            if self.reward_model is None:
                raise ValueError(f"{self.algorithm} needs a reward environment")
            if self.pl_model is not None:
                raise ValueError(f"{self.algorithm} takes no Plackett-Luce model")
            if self.algorithm in _POSTERIOR_ALGS and not self.reward_model.is_bernoulli:
                raise ValueError(
                    f"{self.algorithm} maintains Beta posteriors and needs Bernoulli rewards"
                )
        if self.algorithm in _FAIR_ALGS and (self.epsilon2 is None or self.delta is None):
            raise ValueError(f"{self.algorithm} needs epsilon2 and delta for its budget")
        if self.epsilon1_target is not None and self.algorithm not in _MIXING_ALGS:
            raise ValueError(f"{self.algorithm} does not support uniform mixing")
        if self.audit_epsilon1 < 0.0:
            raise ValueError("audit_epsilon1 must be non-negative")
        if self.audit_epsilon2 is not None and self.audit_epsilon2 < 0.0:
            raise ValueError("audit_epsilon2 must be non-negative")
        if self.epsilon2 is not None and self.delta is not None:
            self.fair_config()  # validates epsilon2 / delta / budget ranges

    @property
    def k(self) -> int:
        model = self.reward_model if self.reward_model is not None else self.pl_model
        return model.k

    def fair_config(self) -> FairSDTSConfig | None:
        if self.epsilon2 is None or self.delta is None:
            return None
        return FairSDTSConfig(
            epsilon2=self.epsilon2,
            delta=self.delta,
            divergence_bound=self.divergence_bound,
            budget_override=self.budget_override,
            epsilon1_target=self.epsilon1_target,
        )

    def audit_spec(self) -> FairnessSpec:
        if self.audit_epsilon2 is not None:
            eps2 = self.audit_epsilon2
        elif self.algorithm in _FAIR_ALGS:
            eps2 = 2.0 * self.epsilon2
        else:
            eps2 = 0.0
        return FairnessSpec(
            epsilon1=self.audit_epsilon1,
            epsilon2=eps2,
            delta=self.delta if self.delta is not None else 0.0,
        )

    def exploration_budget(self) -> int | None:
        fc = self.fair_config()
        if fc is None or self.algorithm not in _FAIR_ALGS:
            return None
        if self.algorithm == "fair_sd_dts":
            return fc.dueling_exploration_budget(self.k)
        return fc.exploration_budget()

    def to_dict(self) -> dict:
        env: dict = {}
        if self.reward_model is not None:
            if self.reward_model.is_bernoulli:
                env["theta"] = list(self.reward_model.bernoulli_means)
            else:
                env["arms"] = [
                    {"values": list(sup), "probs": list(pr)}
                    for sup, pr in zip(self.reward_model.supports, self.reward_model.probs)
                ]
        if self.pl_model is not None:
            env["nu"] = list(self.pl_model.nu)
        spec = self.audit_spec()
        return {
            "algorithm": self.algorithm,
            "arms": self.k,
            "horizon": self.horizon,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "environment": env,
            "epsilon2": self.epsilon2,
            "delta": self.delta,
            "divergence_bound": self.divergence_bound,
            "budget_override": self.budget_override,
            "epsilon1_target": self.epsilon1_target,
            "audit_epsilon1": spec.epsilon1,
            "audit_epsilon2": spec.epsilon2,
            "exploration_budget": self.exploration_budget(),
        }


def _parse_scalar(key: str, raw: str, kind):
    try:
        return kind(raw)
    except ValueError as exc:
        raise ValueError(f"config key {key!r}: cannot parse {raw!r}") from exc


def _parse_float_list(key: str, raw: str) -> list[float]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ValueError(f"config key {key!r}: empty list")
    return [_parse_scalar(key, s, float) for s in items]


def _parse_arm_table(mapping: dict[str, str]) -> RewardModel:
    arm_keys = sorted(k for k in mapping if k.startswith("arm_"))
    indices = []
    for key in arm_keys:
        suffix = key[len("arm_"):]
        if not suffix.isdigit():
            raise ValueError(f"arm keys look like arm_0, arm_1, ...; got {key!r}")
        indices.append(int(suffix))
    if sorted(indices) != list(range(len(indices))):
        raise ValueError("arm_<i> keys must be contiguous from arm_0")
    supports, probs = [], []
    for i in range(len(indices)):
        raw = mapping[f"arm_{i}"]
        sup, pr = [], []
        for atom in raw.split(","):
            atom = atom.strip()
            if not atom:
                continue
            if ":" not in atom:
                raise ValueError(
                    f"arm_{i}: atoms look like value:prob, got {atom!r}"
                )
            v, p = atom.split(":", 1)
            sup.append(_parse_scalar(f"arm_{i}", v.strip(), float))
            pr.append(_parse_scalar(f"arm_{i}", p.strip(), float))
        supports.append(tuple(sup))
        probs.append(tuple(pr))
    return RewardModel(supports=tuple(supports), probs=tuple(probs))


_SCALAR_KEYS = {
    "algorithm": str,
    "horizon": int,
    "replications": int,
    "seed": int,
    "epsilon2": float,
    "delta": float,
    "divergence_bound": float,
    "budget": int,
    "mixing_epsilon1": float,
    "audit_epsilon1": float,
    "audit_epsilon2": float,
    "out": str,
}


def config_from_mapping(mapping: dict[str, str]) -> ExperimentConfig:
    """Build a config from flat string key=value pairs (the file schema)."""
    known = set(_SCALAR_KEYS) | {"theta", "nu"}
    for key in mapping:
        if key not in known and not key.startswith("arm_"):
            raise ValueError(f"unknown config key {key!r}")
    env_kinds = [kind for kind in ("theta", "nu") if kind in mapping]
    if any(k.startswith("arm_") for k in mapping):
        env_kinds.append("arm table")
    if len(env_kinds) != 1:
        raise ValueError(
            f"exactly one of theta, nu, or arm_<i> keys must describe the environment; got {env_kinds}"
        )
    reward_model = pl_model = None
    if "theta" in mapping:
        reward_model = RewardModel.bernoulli(_parse_float_list("theta", mapping["theta"]))
    elif "nu" in mapping:
        pl_model = PLModel(nu=tuple(_parse_float_list("nu", mapping["nu"])))
    else:
        reward_model = _parse_arm_table(mapping)

    def scalar(key: str, default=None):
        if key not in mapping:
            return default
        return _parse_scalar(key, mapping[key], _SCALAR_KEYS[key])

    if "algorithm" not in mapping:
        raise ValueError("config must name an algorithm")
    if "horizon" not in mapping or "replications" not in mapping:
        raise ValueError("config must set horizon and replications")
    kwargs = dict(
        algorithm=mapping["algorithm"].strip(),
        horizon=scalar("horizon"),
        replications=scalar("replications"),
        master_seed=scalar("seed", 0),
        reward_model=reward_model,
        pl_model=pl_model,
        epsilon2=scalar("epsilon2"),
        delta=scalar("delta"),
        budget_override=scalar("budget"),
        epsilon1_target=scalar("mixing_epsilon1"),
        audit_epsilon1=scalar("audit_epsilon1", 2.0),
        audit_epsilon2=scalar("audit_epsilon2"),
        out_dir=scalar("out"),
    )
    if "divergence_bound" in mapping:
        kwargs["divergence_bound"] = scalar("divergence_bound")
    return ExperimentConfig(**kwargs)


def config_from_file(path) -> ExperimentConfig:
    """Parse a flat key = value config file ('#' starts a comment)."""
    mapping: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if key in mapping:
            raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
        mapping[key] = value.strip()
    return config_from_mapping(mapping)


def _pair_arrays(k: int) -> tuple[tuple[tuple[int, int], ...], np.ndarray, np.ndarray]:
    pairs = all_pairs(k)
    i_idx = np.array([i for i, _ in pairs])
    j_idx = np.array([j for _, j in pairs])
    return pairs, i_idx, j_idx


def _run_reward_replication(
    config: ExperimentConfig, rng: np.random.Generator
) -> tuple[History, RegretTrace]:
    model = config.reward_model
    k, horizon = model.k, config.horizon
    target = calibrated_target(model)
    pairs, i_idx, j_idx = _pair_arrays(k)
    spec = config.audit_spec()
    div_obj = np.array(
        [tv_finite(model.arm_dist(i), model.arm_dist(j)) for i, j in pairs]
    )
    bounds_obj = spec.epsilon1 * div_obj + spec.epsilon2
    posterior = (
        PosteriorState.initial(k) if config.algorithm in _POSTERIOR_ALGS else None
    )
    fc = config.fair_config()
    mix_w = None if config.epsilon1_target is None else config.epsilon1_target / 2.0
    uniform = uniform_rule(k)

    regret = np.empty(horizon)
    obj_slack = np.empty((horizon, len(pairs)))
    subj_slack = np.empty((horizon, len(pairs))) if posterior is not None else None
    history = History()
    exploration_rounds = 0

    for t in range(1, horizon + 1):
        if posterior is not None:
            means_now = posterior.marginal_means()
        if config.algorithm == "uniform":
            phase, rule = PHASE_EXPLOITATION, uniform
            arm = categorical(rng, rule)
        elif config.algorithm == "standard_ts":
            phase = PHASE_EXPLOITATION
            arm = standard_ts_draw(posterior, rng)
            rule = one_hot_rule(k, arm)
        elif config.algorithm == "sdts":
            phase = PHASE_EXPLOITATION
            rule = exact_sdts_rule(means_now)
            if mix_w is not None:
                rule = mixed_rule(rule, mix_w)
            arm = categorical(rng, rule)
        else:  # fair_sdts
            phase, rule, arm = fair_sdts_step(posterior, fc, rng)
        reward = sample_reward(model, arm, rng)
        idx = t - 1
        regret[idx] = np.maximum(target - rule, 0.0).sum()
        gaps = np.abs(rule[i_idx] - rule[j_idx])
        obj_slack[idx] = bounds_obj - gaps
        if posterior is not None:
            div_sub = np.abs(means_now[i_idx] - means_now[j_idx])
            subj_slack[idx] = spec.epsilon1 * div_sub + spec.epsilon2 - gaps
            posterior.update(arm, reward)
        if phase == PHASE_EXPLORATION:
            exploration_rounds += 1
        history.append(RoundRecord(t=t, phase=phase, action=arm, reward=reward, rule=rule))

    trace = RegretTrace(
        regret=regret,
        cumulative=np.cumsum(regret),
        pairs=pairs,
        objective_slack=obj_slack,
        subjective_slack=subj_slack,
        exploration_rounds=exploration_rounds,
    )
    return history, trace


def _run_dueling_replication(
    config: ExperimentConfig, rng: np.random.Generator
) -> tuple[History, RegretTrace]:
    model = config.pl_model
    k, horizon = model.k, config.horizon
    target = pl_rank1_exact(model)
    pairs, i_idx, j_idx = _pair_arrays(k)
    spec = config.audit_spec()
    pm = model.pairwise_probs
    div_obj = np.abs(pm[i_idx, j_idx] - 0.5)
    bounds_obj = spec.epsilon1 * div_obj + spec.epsilon2
    fc = config.fair_config()
    stats = PairwiseStats(k)

    regret = np.empty(horizon)
    obj_slack = np.empty((horizon, len(pairs)))
    subj_slack = np.empty((horizon, len(pairs)))
    history = History()
    exploration_rounds = 0

    for t in range(1, horizon + 1):
        phase, rule, (first, second) = fair_sd_dts_step(stats, fc, rng)
        outcome = sample_duel(model, first, second, rng)
        idx = t - 1
        regret[idx] = np.maximum(target - rule, 0.0).sum()
        gaps = np.abs(rule[i_idx] - rule[j_idx])
        obj_slack[idx] = bounds_obj - gaps
        believed = stats.clamped_matrix()
        div_sub = np.abs(believed[i_idx, j_idx] - 0.5)
        subj_slack[idx] = spec.epsilon1 * div_sub + spec.epsilon2 - gaps
        stats.update(first, second, outcome)
        if phase == PHASE_EXPLORATION:
            exploration_rounds += 1
        history.append(
            RoundRecord(
                t=t, phase=phase, action=(first, second), reward=float(outcome), rule=rule
            )
        )

    trace = RegretTrace(
        regret=regret,
        cumulative=np.cumsum(regret),
        pairs=pairs,
        objective_slack=obj_slack,
        subjective_slack=subj_slack,
        exploration_rounds=exploration_rounds,
    )
    return history, trace


def run_replication(
    config: ExperimentConfig, replication: int
) -> tuple[History, RegretTrace]:
    """Run one replication on its own random stream; pure function of
    (config, replication index)."""
    if replication < 0:
        raise ValueError("replication index must be non-negative")
    rng = replication_rng(config.master_seed, replication)
    if config.algorithm == "fair_sd_dts":
        return _run_dueling_replication(config, rng)
    return _run_reward_replication(config, rng)


def loglog_slope(mean_cumulative: np.ndarray, exploration_rounds: int) -> float | None:
    """Least-squares slope of log cumulative regret vs log round over the
    final decade, provided the horizon reaches a full decade past the
    exploration phase; None otherwise."""
    horizon = len(mean_cumulative)
    t0 = exploration_rounds + 1
    if horizon < 10 * t0:
        return None
    start = max(t0, math.ceil(horizon / 10))
    t = np.arange(start, horizon + 1, dtype=float)
    y = np.asarray(mean_cumulative[start - 1 :], dtype=float)
    mask = y > 0.0
    if mask.sum() < 5:
        return None
    slope = np.polyfit(np.log(t[mask]), np.log(y[mask]), 1)[0]
    return float(slope)


@dataclass
class SummaryReport:
    """Cross-replication aggregates of one experiment."""

    algorithm: str
    arms: int
    horizon: int
    replications: int
    master_seed: int
    audit: FairnessSpec
    exploration_budget: int | None
    final_regret: np.ndarray
    exploration_rounds: np.ndarray
    objective_violations: int
    subjective_violations: int | None
    mean_cumulative: np.ndarray
    stderr_cumulative: np.ndarray
    loglog_slope: float | None
    config_echo: dict = field(default_factory=dict)

    @property
    def mean_final_regret(self) -> float:
        return float(self.final_regret.mean())

    @property
    def stderr_final_regret(self) -> float:
        if self.replications < 2:
            return 0.0
        return float(self.final_regret.std(ddof=1) / math.sqrt(self.replications))

    @property
    def objective_violation_probability(self) -> float:
        return self.objective_violations / self.replications

    @property
    def subjective_violation_probability(self) -> float | None:
        if self.subjective_violations is None:
            return None
        return self.subjective_violations / self.replications

    def tail_mean_regret(self, fraction: float = 0.1) -> float:
        """Mean per-round regret over the last fraction of the horizon,
        read off the mean cumulative curve."""
        if not 0.0 < fraction <= 1.0:
            raise ValueError("fraction must lie in (0, 1]")
        window = max(1, int(fraction * self.horizon))
        start = self.horizon - window
        base = self.mean_cumulative[start - 1] if start >= 1 else 0.0
        return float((self.mean_cumulative[-1] - base) / window)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "arms": self.arms,
            "horizon": self.horizon,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "config": self.config_echo,
            "exploration_budget": self.exploration_budget,
            "final_regret": {
                "per_replication": [float(x) for x in self.final_regret],
                "mean": self.mean_final_regret,
                "stderr": self.stderr_final_regret,
            },
            "exploration_rounds": {
                "per_replication": [int(x) for x in self.exploration_rounds],
                "mean": float(self.exploration_rounds.mean()),
            },
            "violations": {
                "audit_epsilon1": self.audit.epsilon1,
                "audit_epsilon2": self.audit.epsilon2,
                "delta": self.audit.delta,
                "objective_replications": self.objective_violations,
                "objective_probability": self.objective_violation_probability,
                "subjective_replications": self.subjective_violations,
                "subjective_probability": self.subjective_violation_probability,
            },
            "tail_mean_regret_last_10pct": self.tail_mean_regret(0.1),
            "loglog_slope": self.loglog_slope,
        }


def run_experiment(config: ExperimentConfig, out_dir: str | None = None) -> SummaryReport:
    """Run all replications, aggregate, and (when an output directory is
    set) write the per-round table, summary document, regret-curve table,
    and regret-curve figure."""
    out = out_dir if out_dir is not None else config.out_dir
    horizon, n_reps = config.horizon, config.replications
    sum_cum = np.zeros(horizon)
    sumsq_cum = np.zeros(horizon)
    final = np.empty(n_reps)
    expl = np.zeros(n_reps, dtype=np.int64)
    objective_violations = 0
    subjective_violations: int | None = None
    writer = None
    out_path = None
    if out is not None:
        out_path = Path(out)
        out_path.mkdir(parents=True, exist_ok=True)
        writer = reports.RoundsWriter(out_path / "rounds.csv", k=config.k)
    try:
        for r in range(n_reps):
            history, trace = run_replication(config, r)
            if writer is not None:
                writer.write_replication(r, history, trace)
            cum = trace.cumulative
            sum_cum += cum
            sumsq_cum += cum * cum
            final[r] = trace.final_regret
            expl[r] = trace.exploration_rounds
            if trace.objective_violated:
                objective_violations += 1
            flag = trace.subjective_violated
            if flag is not None:
                subjective_violations = (subjective_violations or 0) + int(flag)
    finally:
        if writer is not None:
            writer.close()
    mean_cum = sum_cum / n_reps
    if n_reps >= 2:
        var = np.maximum(sumsq_cum - n_reps * mean_cum * mean_cum, 0.0) / (n_reps - 1)
        stderr_cum = np.sqrt(var / n_reps)
    else:
        stderr_cum = np.zeros(horizon)
    report = SummaryReport(
        algorithm=config.algorithm,
        arms=config.k,
        horizon=horizon,
        replications=n_reps,
        master_seed=config.master_seed,
        audit=config.audit_spec(),
        exploration_budget=config.exploration_budget(),
        final_regret=final,
        exploration_rounds=expl,
        objective_violations=objective_violations,
        subjective_violations=subjective_violations,
        mean_cumulative=mean_cum,
        stderr_cumulative=stderr_cum,
        loglog_slope=loglog_slope(mean_cum, int(expl.max())),
        config_echo=config.to_dict(),
    )
    if out_path is not None:
        reports.write_summary(out_path / "summary.json", report.to_dict())
        reports.write_regret_curve(out_path / "regret_curve.csv", mean_cum, stderr_cum)
        reports.render_regret_figure(out_path / "regret_curve.png", report)
    return report


def with_overrides(
    config: ExperimentConfig,
    master_seed: int | None = None,
    out_dir: str | None = None,
) -> ExperimentConfig:
    """Copy a config with CLI-level overrides applied."""
    updates = {}
    if master_seed is not None:
        updates["master_seed"] = master_seed
    if out_dir is not None:
        updates["out_dir"] = out_dir
    return replace(config, **updates) if updates else config
