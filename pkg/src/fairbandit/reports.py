"""Flat-file outputs: per-round table, summary document, regret-curve
table, and the regret-curve figure rendered beside it.

All numeric cells use a fixed shortest-round-trip format so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def fmt(value: float) -> str:
    return format(float(value), ".12g")


class RoundsWriter:
    """Streams per-round rows for successive replications into one file.

    Columns: replication, t, phase, action, reward, pi_0..pi_{k-1},
    regret_round, regret_cum, max_smooth_slack_violation. Duel actions
    render as "i-j" and reward carries the win indicator.
    """

    def __init__(self, path, k: int):
        self.path = Path(path)
        self.k = k
        self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        pi_cols = ",".join(f"pi_{i}" for i in range(k))
        self._fh.write(
            f"replication,t,phase,action,reward,{pi_cols},"
            "regret_round,regret_cum,max_smooth_slack_violation\n"
        )

    def write_replication(self, replication: int, history, trace) -> None:
        worst = trace.worst_violation_per_round()
        for rec, rr, rc, wv in zip(history, trace.regret, trace.cumulative, worst):
            if isinstance(rec.action, tuple):
                action = f"{rec.action[0]}-{rec.action[1]}"
            else:
                action = str(int(rec.action))
            cells = [str(replication), str(rec.t), rec.phase, action, fmt(rec.reward)]
            cells.extend(fmt(p) for p in rec.rule)
            cells.extend([fmt(rr), fmt(rc), fmt(wv)])
            self._fh.write(",".join(cells) + "\n")

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def write_regret_curve(path, mean_cumulative: np.ndarray, stderr_cumulative: np.ndarray) -> None:
    """Plot-ready aggregate: one row per round, columns t, mean_regret_cum, stderr."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,mean_regret_cum,stderr\n")
        for t, (m, s) in enumerate(zip(mean_cumulative, stderr_cumulative), start=1):
            fh.write(f"{t},{fmt(m)},{fmt(s)}\n")


def write_summary(path, payload: dict) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def render_regret_figure(path, report) -> None:
    """Two-panel view of the mean cumulative fairness regret: linear scale
    with a +/-2 stderr band, and log-log scale with a 2/3-slope guide
    (the growth rate the budgeted algorithms are expected not to exceed
    asymptotically)."""
    path = Path(path)
    mean = np.asarray(report.mean_cumulative)
    stderr = np.asarray(report.stderr_cumulative)
    horizon = len(mean)
    t = np.arange(1, horizon + 1)

    fig, (ax_lin, ax_log) = plt.subplots(1, 2, figsize=(11, 4.2))
    ax_lin.plot(t, mean, color="tab:blue", lw=1.5, label="mean cumulative regret")
    ax_lin.fill_between(
        t, mean - 2 * stderr, mean + 2 * stderr, color="tab:blue", alpha=0.25,
        label="+/- 2 stderr",
    )
    expl = int(np.max(report.exploration_rounds)) if report.replications else 0
    if expl > 0:
        ax_lin.axvline(expl, color="gray", ls=":", lw=1, label="exploration ends (max)")
    ax_lin.set_xlabel("round t")
    ax_lin.set_ylabel("cumulative fairness regret")
    ax_lin.set_title(f"{report.algorithm}, k={report.arms}, R={report.replications}")
    ax_lin.legend(loc="upper left", fontsize=8)

    positive = mean > 0
    if positive.any():
        ax_log.loglog(t[positive], mean[positive], color="tab:blue", lw=1.5)
        t_ref = t[positive][-1]
        y_ref = mean[positive][-1]
        guide_t = np.array([max(1, t_ref // 10), t_ref], dtype=float)
        ax_log.loglog(
            guide_t, y_ref * (guide_t / t_ref) ** (2.0 / 3.0),
            color="tab:orange", ls="--", lw=1, label="slope 2/3 guide",
        )
        if report.loglog_slope is not None:
            ax_log.set_title(f"fitted slope {report.loglog_slope:.3f} (last decade)")
        ax_log.legend(loc="upper left", fontsize=8)
    ax_log.set_xlabel("round t (log)")
    ax_log.set_ylabel("cumulative fairness regret (log)")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
