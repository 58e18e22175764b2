"""Command-line front end.

Subcommands: run (execute a config file and write outputs), oracle
(print the calibrated target for a model given inline), audit (re-check
a per-round table against a smooth-fairness spec).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .dueling import all_pairs, pl_rank1_exact
from .envs import CapacityError, PLModel, RewardModel
from .fairness import (
    VIOLATION_TOL,
    FairnessSpec,
    calibrated_target,
    calibrated_target_mc,
    tv_finite,
)
from .harness import config_from_file, run_experiment, with_overrides
from .reports import fmt


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairbandit",
        description="Fairness-aware bandit simulations: calibrated targets, "
        "smooth-fairness audits, and seeded experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("--config", required=True, help="path to a key = value config file")
    run_p.add_argument("--seed", type=int, default=None, help="override the master seed")
    run_p.add_argument("--out", default=None, help="override the output directory")

    oracle_p = sub.add_parser(
        "oracle", help="print the calibrated target for a reward or ranking model"
    )
    oracle_p.add_argument("--theta", default=None, help="Bernoulli means, e.g. 0.9,0.5,0.4")
    oracle_p.add_argument(
        "--arm",
        action="append",
        default=None,
        metavar="VALUE:PROB,...",
        help="finite-support arm as value:prob atoms; repeat once per arm in order",
    )
    oracle_p.add_argument("--nu", default=None, help="Plackett-Luce utilities, e.g. 2,1,1")
    oracle_p.add_argument(
        "--samples",
        type=int,
        default=None,
        help="Monte Carlo sample count (fallback when enumeration exceeds capacity)",
    )
    oracle_p.add_argument("--seed", type=int, default=0, help="seed for the Monte Carlo path")

    audit_p = sub.add_parser("audit", help="re-audit a per-round table for smoothness")
    audit_p.add_argument("--trace", required=True, help="path to a rounds.csv table")
    audit_p.add_argument("--eps1", type=float, default=2.0, help="divergence multiplier")
    audit_p.add_argument("--eps2", type=float, required=True, help="additive slack")
    audit_p.add_argument("--theta", default=None, help="override: Bernoulli means")
    audit_p.add_argument("--nu", default=None, help="override: Plackett-Luce utilities")
    audit_p.add_argument(
        "--summary",
        default=None,
        help="summary.json holding the environment (default: next to the trace)",
    )
    return parser


def _floats(raw: str) -> list[float]:
    return [float(s) for s in raw.split(",") if s.strip()]


def _model_from_args(theta, arms, nu):
    given = [name for name, val in (("theta", theta), ("arm", arms), ("nu", nu)) if val]
    if len(given) != 1:
        raise ValueError(f"give exactly one of --theta, --arm, --nu (got {given or 'none'})")
    if theta:
        return RewardModel.bernoulli(_floats(theta))
    if nu:
        return PLModel(nu=tuple(_floats(nu)))
    supports, probs = [], []
    for spec in arms:
        sup, pr = [], []
        for atom in spec.split(","):
            atom = atom.strip()
            if not atom:
                continue
            value, _, prob = atom.partition(":")
            if not prob:
                raise ValueError(f"--arm atoms look like value:prob, got {atom!r}")
            sup.append(float(value))
            pr.append(float(prob))
        supports.append(tuple(sup))
        probs.append(tuple(pr))
    return RewardModel(supports=tuple(supports), probs=tuple(probs))


def _cmd_oracle(args) -> int:
    model = _model_from_args(args.theta, args.arm, args.nu)
    if isinstance(model, PLModel):
        target = pl_rank1_exact(model)
    else:
        try:
            target = calibrated_target(model)
        except CapacityError:
            if args.samples is None:
                raise
            rng = np.random.default_rng(args.seed)
            target, _ = calibrated_target_mc(model, args.samples, rng)
    print(" ".join(fmt(x) for x in target))
    return 0


def _cmd_run(args) -> int:
    config = config_from_file(args.config)
    config = with_overrides(config, master_seed=args.seed, out_dir=args.out)
    report = run_experiment(config)
    print(
        f"algorithm={report.algorithm} arms={report.arms} horizon={report.horizon} "
        f"replications={report.replications} seed={report.master_seed}"
    )
    if report.exploration_budget is not None:
        print(
            f"exploration_budget={report.exploration_budget} "
            f"mean_exploration_rounds={fmt(report.exploration_rounds.mean())}"
        )
    print(
        f"mean_final_regret={fmt(report.mean_final_regret)} "
        f"stderr={fmt(report.stderr_final_regret)}"
    )
    subj = report.subjective_violation_probability
    print(
        f"objective_violation_probability={fmt(report.objective_violation_probability)}"
        + (f" subjective_violation_probability={fmt(subj)}" if subj is not None else "")
    )
    if report.loglog_slope is not None:
        print(f"loglog_slope={fmt(report.loglog_slope)}")
    out = config.out_dir
    if out is not None:
        print(
            f"wrote {out}/rounds.csv {out}/summary.json "
            f"{out}/regret_curve.csv {out}/regret_curve.png"
        )
    return 0


def _model_from_summary(path: Path):
    payload = json.loads(path.read_text())
    env = payload.get("config", {}).get("environment", {})
    if "theta" in env:
        return RewardModel.bernoulli(env["theta"])
    if "nu" in env:
        return PLModel(nu=tuple(env["nu"]))
    if "arms" in env:
        return RewardModel(
            supports=tuple(tuple(a["values"]) for a in env["arms"]),
            probs=tuple(tuple(a["probs"]) for a in env["arms"]),
        )
    raise ValueError(f"{path}: no environment found in summary document")


def _pair_divergences(model) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pairs = all_pairs(model.k)
    i_idx = np.array([i for i, _ in pairs])
    j_idx = np.array([j for _, j in pairs])
    if isinstance(model, PLModel):
        pm = model.pairwise_probs
        div = np.abs(pm[i_idx, j_idx] - 0.5)
    else:
        div = np.array(
            [tv_finite(model.arm_dist(i), model.arm_dist(j)) for i, j in pairs]
        )
    return div, i_idx, j_idx


def _cmd_audit(args) -> int:
    trace_path = Path(args.trace)
    if args.theta or args.nu:
        model = _model_from_args(args.theta, None, args.nu)
    else:
        summary = Path(args.summary) if args.summary else trace_path.parent / "summary.json"
        if not summary.exists():
            raise ValueError(
                f"no environment given: pass --theta/--nu or provide {summary}"
            )
        model = _model_from_summary(summary)
    spec = FairnessSpec(epsilon1=args.eps1, epsilon2=args.eps2)
    div, i_idx, j_idx = _pair_divergences(model)
    bounds = spec.epsilon1 * div + spec.epsilon2

    rounds = 0
    violating_rounds = 0
    worst = -np.inf
    pair_violations = np.zeros(len(div), dtype=np.int64)
    with open(trace_path, newline="") as fh:
        reader = csv.DictReader(fh)
        pi_cols = [c for c in reader.fieldnames or [] if c.startswith("pi_")]
        if len(pi_cols) != model.k:
            raise ValueError(
                f"trace has {len(pi_cols)} pi columns but the model has {model.k} arms"
            )
        pi_cols.sort(key=lambda c: int(c.split("_", 1)[1]))
        for row in reader:
            rule = np.array([float(row[c]) for c in pi_cols])
            gaps = np.abs(rule[i_idx] - rule[j_idx])
            excess = gaps - bounds
            worst = max(worst, float(excess.max()))
            flags = excess > VIOLATION_TOL
            pair_violations += flags
            violating_rounds += bool(flags.any())
            rounds += 1
    if rounds == 0:
        raise ValueError(f"{trace_path}: no data rows")
    print(
        f"rounds={rounds} eps1={fmt(spec.epsilon1)} eps2={fmt(spec.epsilon2)} "
        f"violating_rounds={violating_rounds} "
        f"fraction={fmt(violating_rounds / rounds)} worst_violation={fmt(worst)}"
    )
    for (i, j, d, b, v) in zip(i_idx, j_idx, div, bounds, pair_violations):
        print(
            f"pair={i}-{j} divergence={fmt(d)} bound={fmt(b)} violations={int(v)}"
        )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": _cmd_run, "oracle": _cmd_oracle, "audit": _cmd_audit}
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
