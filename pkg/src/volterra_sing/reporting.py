"""CSV report writers and trajectory export.

measurements.csv and verdicts.csv are the machine-readable products of a
run; every measurement row carries the config hash and master seed so any
number in any report can be regenerated from the repository alone.
Floats are written with repr-level precision, which is what makes
byte-identical reruns a meaningful promise.
"""

from __future__ import annotations

import csv
import datetime
import io
import os
from typing import Iterable

import numpy as np

from .experiments import ExperimentReport
from .solvers import Trajectory

__all__ = [
    "format_value",
    "render_measurements_csv",
    "render_verdicts_csv",
    "write_report",
    "write_trajectories_csv",
]


def format_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float) or isinstance(x, np.floating):
        return f"{float(x):.17g}"
    return str(x)


def render_measurements_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(report.columns) + ["config_hash", "seed"])
    for row in report.rows:
        writer.writerow([format_value(v) for v in row] + [report.config_hash, str(report.seed)])
    return buf.getvalue()


def render_verdicts_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["check", "threshold", "measured", "passed", "config_hash", "seed"])
    for v in report.verdicts:
        writer.writerow(
            [v.name, v.threshold, v.measured, "pass" if v.passed else "fail",
             report.config_hash, str(report.seed)]
        )
    return buf.getvalue()


def _meta_text(report: ExperimentReport, threads: int) -> str:
    import matplotlib
    import scipy

    from . import __version__

    lines = [
        f"experiment: {report.experiment}",
        f"config_hash: {report.config_hash}",
        f"seed: {report.seed}",
        f"threads: {threads}",
        f"volterra_sing: {__version__}",
        f"numpy: {np.__version__}",
        f"scipy: {scipy.__version__}",
        f"matplotlib: {matplotlib.__version__}",
        f"timestamp: {datetime.datetime.now(datetime.timezone.utc).isoformat()}",
    ]
    if report.rate is not None:
        lines.append(
            "rate_fit: slope=%s intercept=%s r2=%s slope_stderr=%s"
            % tuple(format_value(v) for v in (
                report.rate.slope, report.rate.intercept,
                report.rate.r_squared, report.rate.slope_stderr,
            ))
        )
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def write_report(report: ExperimentReport, out_dir: str, threads: int = 1,
                 figures: bool = True) -> dict:
    """Write measurements.csv, verdicts.csv, meta.txt and the report figure.

    Returns the paths written.  Figures are rendered to PNG next to the
    CSVs; pass figures=False to skip them (the CSV contract is unchanged
    either way).
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "measurements": os.path.join(out_dir, "measurements.csv"),
        "verdicts": os.path.join(out_dir, "verdicts.csv"),
        "meta": os.path.join(out_dir, "meta.txt"),
    }
    with open(paths["measurements"], "w", newline="") as fh:
        fh.write(render_measurements_csv(report))
    with open(paths["verdicts"], "w", newline="") as fh:
        fh.write(render_verdicts_csv(report))
    with open(paths["meta"], "w") as fh:
        fh.write(_meta_text(report, threads))
    if figures:
        from .plots import render_report_figure

        fig_path = os.path.join(out_dir, f"{report.experiment}.png")
        if render_report_figure(report, fig_path):
            paths["figure"] = fig_path
    return paths


def write_trajectories_csv(path, trajectories: Iterable[Trajectory],
                           terminal_only: bool = False) -> None:
    """Stream trajectories as (path_id, step, t, X, phi, G) rows.

    phi and G columns are filled for schemes that record them (the
    singular Ito form) and left empty otherwise.  With terminal_only=True
    only the last grid point of each path is written.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path_id", "step", "t", "X", "phi", "G"])
        for pid, tr in enumerate(trajectories):
            times = tr.grid.times
            phi = tr.aux.get("phi")
            G = tr.aux.get("G")
            steps = [tr.grid.n] if terminal_only else range(tr.grid.n + 1)
            for i in steps:
                writer.writerow(
                    [
                        pid,
                        i,
                        format_value(float(times[i])),
                        format_value(float(tr.values[i])),
                        format_value(float(phi[i])) if phi is not None else "",
                        format_value(float(G[i])) if G is not None else "",
                    ]
                )
