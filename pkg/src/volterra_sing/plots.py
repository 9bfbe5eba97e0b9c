"""Report figures rendered next to the CSV output.

One PNG per run: rate experiments get the log-log scatter with the fitted
line, the equivalence study gets discrepancy against n, the property
suite gets moment and Holder panels.  The audit has no natural figure and
renders nothing.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import ExperimentReport

__all__ = ["render_report_figure"]


def _loglog_rate_panel(ax, xs, ys, rate, xlabel, ylabel):
    ax.loglog(xs, ys, "o", color="tab:blue")
    if rate is not None:
        grid = np.array([min(xs), max(xs)])
        ax.loglog(grid, np.exp(rate.intercept) * grid**rate.slope, "-",
                  color="tab:orange",
                  label=f"slope {rate.slope:.3f} ± {rate.slope_stderr:.3f}")
        ax.legend(frameon=False)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)


def render_report_figure(report: ExperimentReport, path: str) -> bool:
    """Render the experiment's figure to path; False if it has none."""
    if report.experiment == "regularization_rate":
        xs = [r[0] for r in report.rows]
        ys = [r[3] for r in report.rows]
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        _loglog_rate_panel(ax, xs, ys, report.rate, "eps", "mean |X^eps_T - X_T|")
        ax.set_title("regularization rate")
    elif report.experiment == "clt_rate":
        xs = [r[0] for r in report.rows]
        ys = [r[3] for r in report.rows]
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        if min(ys) > 0:
            _loglog_rate_panel(ax, xs, ys, report.rate, "a", "Wasserstein distance")
        else:
            ax.plot(xs, ys, "o")
            ax.set_xlabel("a")
            ax.set_ylabel("Wasserstein distance")
        floor = report.rows[0][5]
        ax.axhline(floor, color="tab:gray", linestyle=":", label="noise floor")
        ax.legend(frameon=False)
        ax.set_title("small-time CLT rate")
    elif report.experiment == "ito_equivalence":
        xs = [r[0] for r in report.rows]
        ys = [r[2] for r in report.rows]
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        ax.loglog(xs, ys, "o-", color="tab:blue")
        ax.set_xlabel("n")
        ax.set_ylabel("mean sup |X_ito - X_volterra|")
        ax.grid(True, which="both", alpha=0.3)
        ax.set_title("Ito-form equivalence")
    elif report.experiment == "property_suite":
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.4, 3.6))
        for p, marker in ((2, "o"), (4, "s")):
            mom = [(r[2], r[3]) for r in report.rows if r[0] == f"moment_p{p}"]
            hol = [(r[2], r[3]) for r in report.rows if r[0] == f"holder_p{p}"]
            if mom:
                ax1.plot(*zip(*mom), marker + "-", label=f"p={p}")
            if hol:
                ax2.plot(*zip(*hol), marker + "-", label=f"p={p}")
        ax1.set_xscale("log", base=2)
        ax2.set_xscale("log", base=2)
        ax1.set_xlabel("n")
        ax1.set_ylabel("E|X_T|^p")
        ax2.set_xlabel("n")
        ax2.set_ylabel("max Holder ratio")
        ax1.legend(frameon=False)
        ax2.legend(frameon=False)
        ax1.grid(alpha=0.3)
        ax2.grid(alpha=0.3)
        fig.suptitle("moment and Holder properties")
    else:
        return False
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return True
