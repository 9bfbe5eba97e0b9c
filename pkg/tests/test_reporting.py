import csv

import numpy as np

from volterra_sing.brownian import SimulationGrid, sample_brownian
from volterra_sing.coefficients import CoefficientSet, ConstantFn, GOne, LinearFn, ProblemSpec
from volterra_sing.experiments import ExperimentReport, Verdict
from volterra_sing.kernels import KernelSpec
from volterra_sing.reporting import (
    format_value,
    render_measurements_csv,
    render_verdicts_csv,
    write_report,
    write_trajectories_csv,
)
from volterra_sing.solvers import solve_ito_form, solve_volterra


def _report():
    return ExperimentReport(
        experiment="regularization_rate",
        config_hash="deadbeef01234567",
        seed=7,
        columns=["eps", "n", "m", "mean_abs_diff", "stderr"],
        rows=[(0.0625, 512, 100, 0.1234567890123456789, 0.0)],
        verdicts=[Verdict("check_a", "x <= 1", "0.5", True),
                  Verdict("check_b", "y <= 1", "2.0", False)],
    )


class TestCsvRendering:
    def test_rows_carry_hash_and_seed(self):
        text = render_measurements_csv(_report())
        lines = text.strip().split("\n")
        assert lines[0] == "eps,n,m,mean_abs_diff,stderr,config_hash,seed"
        assert lines[1].endswith(",deadbeef01234567,7")

    def test_float_precision_round_trips(self):
        text = render_measurements_csv(_report())
        value = text.strip().split("\n")[1].split(",")[3]
        assert float(value) == 0.1234567890123456789

    def test_verdicts_csv(self):
        text = render_verdicts_csv(_report())
        lines = text.strip().split("\n")
        assert "check_a" in lines[1] and lines[1].split(",")[3] == "pass"
        assert lines[2].split(",")[3] == "fail"

    def test_format_value(self):
        assert format_value(True) == "true"
        assert format_value(np.float64(0.5)) == "0.5"
        assert format_value(3) == "3"


class TestWriteReport:
    def test_files_written(self, tmp_path):
        out = tmp_path / "run"
        paths = write_report(_report(), str(out), threads=2, figures=True)
        assert (out / "measurements.csv").exists()
        assert (out / "verdicts.csv").exists()
        assert (out / "meta.txt").exists()
        assert (out / "regularization_rate.png").exists()
        meta = (out / "meta.txt").read_text()
        assert "config_hash: deadbeef01234567" in meta
        assert "threads: 2" in meta

    def test_figures_optional(self, tmp_path):
        out = tmp_path / "run2"
        paths = write_report(_report(), str(out), figures=False)
        assert "figure" not in paths
        assert not (out / "regularization_rate.png").exists()


class TestTrajectoryExport:
    def _problem(self):
        coeffs = CoefficientSet(b=LinearFn(1.0, -0.5), sigma=ConstantFn(1.0), g=GOne(),
                                L=2.0, beta1=1.0, beta2=1.0)
        return ProblemSpec(kernel=KernelSpec.power(0.75), coeffs=coeffs, x0=1.0, T=1.0)

    def test_full_export_columns(self, tmp_path):
        prob = self._problem()
        path = sample_brownian(SimulationGrid(16, 1.0), seed=3)
        trs = [solve_ito_form(prob, path), solve_volterra(prob, path)]
        out = tmp_path / "paths.csv"
        write_trajectories_csv(out, trs)
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2 * 17
        assert rows[0]["path_id"] == "0" and rows[0]["step"] == "0"
        # ito scheme records phi and G; the direct scheme leaves them empty
        assert rows[5]["phi"] != ""
        assert rows[20]["phi"] == ""
        assert float(rows[0]["X"]) == 1.0

    def test_terminal_only(self, tmp_path):
        prob = self._problem()
        path = sample_brownian(SimulationGrid(16, 1.0), seed=3)
        out = tmp_path / "term.csv"
        write_trajectories_csv(out, [solve_volterra(prob, path)], terminal_only=True)
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert rows[0]["step"] == "16"
        assert float(rows[0]["t"]) == 1.0
