"""Reproduction report and parameter scans."""

import math

import pytest

from bellmp import SCAN_COLUMNS, ValidationError, gamma_constants
from bellmp.report import (
    ReproductionReport,
    ReproductionRow,
    ScanSpec,
    build_reproduction_report,
    scan_rows,
)

ME_MAX = 2.896243218458708
IMAX = 2.972698267102243
AP = 1.137145255099279
AM = 0.8407738511664092


# one medium-size run shared by the checks below; restarts=10 keeps it
# under a couple of seconds while every row still passes
@pytest.fixture(scope="module")
def report():
    return build_reproduction_report(restarts=10, seed=7)


class TestReproductionReport:
    def test_overall_pass(self, report):
        assert report.overall_pass
        assert report.overall_pass == all(row.passed for row in report.rows)

    def test_labels_unique(self, report):
        labels = [row.label for row in report.rows]
        assert len(labels) == len(set(labels))

    def test_enumerated_rows_are_exact(self, report):
        exact = {row.label: row for row in report.rows if row.tolerance == 0}
        for d, minimum in ((2, -2.0), (3, -4.0), (4, -10.0 / 3.0)):
            assert exact[f"LHV max d={d}"].computed == 2.0
            assert abs(exact[f"LHV min d={d}"].computed - minimum) < 1e-15

    def test_rows_carry_provenance(self, report):
        assert all(row.provenance for row in report.rows)

    def test_diagnostics_mention_reference_angles(self, report):
        assert any("reference angle" in note for note in report.diagnostics)

    def test_overall_flag_validated(self):
        row = ReproductionRow(label="x", expected=1.0, computed=1.0,
                              tolerance=0.0, passed=True, provenance="p")
        with pytest.raises(ValidationError):
            ReproductionReport(rows=(row,), overall_pass=False,
                               diagnostics=())


class TestScanSpec:
    def test_accepts_plain_range(self):
        spec = ScanSpec(r_from=0.0, r_to=1.0, steps=5)
        assert spec.family == "step"
        assert spec.noise_grid == ()

    @pytest.mark.parametrize("kwargs", [
        {"r_from": 0.0, "r_to": 1.0, "steps": 1},
        {"r_from": 1.0, "r_to": 1.0, "steps": 3},
        {"r_from": 1.0, "r_to": 0.0, "steps": 3},
        {"r_from": float("nan"), "r_to": 1.0, "steps": 3},
        {"r_from": 0.0, "r_to": 1.0, "steps": 3, "family": "geometric"},
        {"r_from": 0.0, "r_to": 1.0, "steps": 3, "noise_grid": (1.5,)},
        {"r_from": 0.0, "r_to": 1.0, "steps": 3, "noise_grid": (-0.1,)},
    ])
    def test_rejects_bad_specs(self, kwargs):
        with pytest.raises(ValidationError):
            ScanSpec(**kwargs)


class TestScanRows:
    def test_grid_and_columns(self):
        rows = scan_rows(ScanSpec(r_from=0.0, r_to=1.0, steps=3))
        assert [row["r"] for row in rows] == [0.0, 0.5, 1.0]
        for row in rows:
            assert tuple(row.keys()) == SCAN_COLUMNS

    def test_endpoints(self):
        rows = scan_rows(ScanSpec(r_from=0.0, r_to=1.0, steps=3))
        g = gamma_constants()
        # r=0 collapses the state onto two equal coefficients, where
        # the first branch degenerates to 2 Gamma1
        assert abs(rows[0]["Imax"] - 2.0 * g.gamma1) < 1e-12
        assert abs(rows[2]["Imax"] - ME_MAX) < 1e-12
        assert abs(rows[2]["S1"] + 3.195137571237352) < 1e-12
        assert abs(rows[2]["Imin"] + 10.0 / 3.0) < 1e-12
        assert abs(rows[2]["Fthr"] - (1.0 - 2.0 / ME_MAX)) < 1e-12

    def test_branch_consistency(self):
        for row in scan_rows(ScanSpec(r_from=0.1, r_to=0.9, steps=9)):
            assert row["Imax"] == max(row["B1"], row["B2"])
            assert row["Imax"] >= row["B2"]
            assert row["Imin"] <= row["S1"] + 1e-15
            assert row["Imin"] <= row["S2"] + 1e-15

    def test_optimal_ratio_recovers_global_maximum(self):
        rows = scan_rows(ScanSpec(r_from=AM / AP, r_to=1.0, steps=2))
        assert abs(rows[0]["Imax"] - IMAX) < 1e-12

    def test_noise_grid_scales_linearly(self):
        rows = scan_rows(ScanSpec(r_from=0.5, r_to=1.0, steps=2,
                                  noise_grid=(0.0, 0.25, 1.0)))
        for row in rows:
            noisy = row["noisy_Imax"]
            assert set(noisy) == {"0", "0.25", "1"}
            assert abs(noisy["0"] - row["Imax"]) < 1e-15
            assert abs(noisy["0.25"] - 0.75 * row["Imax"]) < 1e-12
            assert abs(noisy["1"]) < 1e-15

    def test_rows_without_noise_grid_have_no_noise_column(self):
        rows = scan_rows(ScanSpec(r_from=0.0, r_to=1.0, steps=2))
        assert all("noisy_Imax" not in row for row in rows)
