"""Reproduction report and parameter-scan helpers for the CLI.

The reproduction report recomputes every headline quantity through an
independent path (radical closed forms, exact enumeration, or the
numeric optimizer) and compares each against its expected decimal at a
stated tolerance.  Exact rational rows carry tolerance zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .model import (
    Dimension,
    KernelVariant,
    make_state,
    maximally_entangled_state,
    zero_settings,
    ValidationError,
)
from .analytic import (
    branch_values_max,
    branch_values_min,
    gamma_constants,
    optimal_max_state,
    optimal_min_state,
    reference_optimal_angles,
    threshold_noise,
)
from .engine import bell_value, t_coefficients_alt
from .lhv import lhv_bounds
from .optimize import (
    Direction,
    OptimizerConfig,
    max_abs_t_coefficient,
    optimize_angles,
    optimize_joint,
)

__all__ = [
    "ReproductionRow",
    "ReproductionReport",
    "build_reproduction_report",
    "ScanSpec",
    "SCAN_COLUMNS",
    "scan_rows",
]

_D4 = Dimension(4)


@dataclass(frozen=True)
class ReproductionRow:
    label: str
    expected: float
    computed: float
    tolerance: float
    passed: bool
    provenance: str


@dataclass(frozen=True)
class ReproductionReport:
    rows: tuple[ReproductionRow, ...]
    overall_pass: bool
    diagnostics: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.overall_pass != all(row.passed for row in self.rows):
            raise ValidationError("overall_pass must be the conjunction of row passes")


def _row(label: str, expected: float, computed: float, tolerance: float,
         provenance: str) -> ReproductionRow:
    passed = abs(computed - expected) <= tolerance
    return ReproductionRow(label, float(expected), float(computed), tolerance,
                           passed, provenance)


def _exact_row(label: str, expected: Fraction, computed: Fraction,
               provenance: str) -> ReproductionRow:
    return ReproductionRow(label, float(expected), float(computed), 0.0,
                           computed == expected, provenance)


def build_reproduction_report(restarts: int = 50, seed: int = 7) -> ReproductionReport:
    """Recompute the headline numbers and compare at fixed tolerances.

    restarts/seed feed the optimizer-backed rows; the defaults match
    the documented engineering defaults and finish in well under a
    minute per joint search.
    """
    g = gamma_constants()
    rows: list[ReproductionRow] = []

    rows.append(_row("Gamma1 radical", 0.87104, g.gamma1, 1e-5, "radical constant"))
    rows.append(_row("Gamma2 radical", 0.4714, g.gamma2, 1e-4, "radical constant"))
    rows.append(_row("Gamma3 radical", 0.36080, g.gamma3, 1e-4, "radical constant"))

    for d, expected_min in ((2, Fraction(-2)), (3, Fraction(-4)), (4, Fraction(-10, 3))):
        report = lhv_bounds(Dimension(d))
        rows.append(_exact_row(
            f"LHV max d={d}", Fraction(2), report.max_value,
            f"exhaustive {d ** 4}-strategy enumeration",
        ))
        rows.append(_exact_row(
            f"LHV min d={d}", expected_min, report.min_value,
            f"exhaustive {d ** 4}-strategy enumeration",
        ))

    me = maximally_entangled_state(_D4)
    run_max_me = optimize_angles(me, OptimizerConfig(
        restarts=restarts, seed=seed, direction=Direction.MAXIMIZE))
    closed_form = g.gamma1 + 2.0 * g.gamma2 + 3.0 * g.gamma3
    rows.append(_row("max at maximally entangled", 2.89624,
                     run_max_me.best.value, 1e-4,
                     f"multi-start phase search, {restarts} restarts"))
    rows.append(_row("max at maximally entangled vs closed form", closed_form,
                     run_max_me.best.value, 1e-10,
                     "optimizer against Gamma1 + 2 Gamma2 + 3 Gamma3"))
    rows.append(_row("noise threshold, maximally entangled", 0.30945,
                     threshold_noise(run_max_me.best.value), 1e-4,
                     "1 - 2/I at the optimized value"))

    run_min_me = optimize_angles(me, OptimizerConfig(
        restarts=restarts, seed=seed, direction=Direction.MINIMIZE))
    rows.append(_row("min at maximally entangled", -10.0 / 3.0,
                     run_min_me.best.value, 1e-6,
                     f"multi-start phase search, {restarts} restarts"))

    opt_state, opt_value = optimal_max_state()
    ap, am = opt_state.coefficients[0], opt_state.coefficients[2]
    rows.append(_row("optimal max coefficient, high", 1.13715, ap, 1e-5,
                     "closed-form radical"))
    rows.append(_row("optimal max coefficient, low", 0.84077, am, 1e-5,
                     "closed-form radical"))
    rows.append(_row("global max, closed form", 2.9727, opt_value, 1e-4,
                     "radical closed form"))

    run_joint_max = optimize_joint(_D4, OptimizerConfig(
        restarts=restarts, seed=seed, direction=Direction.MAXIMIZE,
        free_state=True))
    rows.append(_row("global max, joint optimizer", 2.9727,
                     run_joint_max.best.value, 1e-3,
                     f"alternating state/phase search, {restarts} restarts"))
    sorted_found = tuple(sorted(
        (abs(c) for c in run_joint_max.best.state.coefficients), reverse=True))
    deviation = max(abs(found - want) for found, want
                    in zip(sorted_found, (ap, ap, am, am)))
    rows.append(_row("joint max state vs radical coefficients", 0.0,
                     deviation, 1e-3, "optimizer state against radicals"))
    threshold_opt = threshold_noise(run_joint_max.best.value)
    threshold_me = threshold_noise(run_max_me.best.value)
    rows.append(_row("noise threshold, optimal state", 0.3272,
                     threshold_opt, 1e-3, "1 - 2/I at the joint optimum"))
    rows.append(_row("relative noise-resistance gain", 0.057,
                     (threshold_opt - threshold_me) / threshold_me, 0.01,
                     "thresholds of the two optima"))

    kopt_state, kopt_value = optimal_min_state()
    kp, km = kopt_state.coefficients[0], kopt_state.coefficients[2]
    rows.append(_row("optimal min coefficient, high", 1.19038, kp, 1e-5,
                     "closed-form radical"))
    rows.append(_row("optimal min coefficient, low", 0.76354, km, 1e-5,
                     "closed-form radical"))
    rows.append(_row("global min, closed form", -3.46424, kopt_value, 1e-4,
                     "radical closed form"))

    run_joint_min = optimize_joint(_D4, OptimizerConfig(
        restarts=restarts, seed=seed, direction=Direction.MINIMIZE,
        free_state=True))
    rows.append(_row("global min, joint optimizer", -3.46424,
                     run_joint_min.best.value, 1e-3,
                     f"alternating state/phase search, {restarts} restarts"))
    sorted_found = tuple(sorted(
        (abs(c) for c in run_joint_min.best.state.coefficients), reverse=True))
    deviation = max(abs(found - want) for found, want
                    in zip(sorted_found, (kp, kp, km, km)))
    rows.append(_row("joint min state vs radical coefficients", 0.0,
                     deviation, 1e-3, "optimizer state against radicals"))

    t01, _ = max_abs_t_coefficient((0, 1), restarts=max(4, restarts // 8), seed=seed)
    t02, _ = max_abs_t_coefficient((0, 2), restarts=max(4, restarts // 8), seed=seed)
    rows.append(_row("max |T01| vs Gamma1", g.gamma1, t01, 1e-6,
                     "reduced four-angle search"))
    rows.append(_row("max |T02| vs Gamma2", g.gamma2, t02, 1e-6,
                     "reduced four-angle search"))

    run_d2 = optimize_joint(Dimension(2), OptimizerConfig(
        restarts=max(4, restarts // 4), seed=seed, direction=Direction.MAXIMIZE,
        free_state=True))
    rows.append(_row("d=2 joint max (CHSH reduction)", 2.0 * math.sqrt(2.0),
                     run_d2.best.value, 1e-6,
                     "joint optimizer at d=2"))

    diagnostics = _diagnostics(opt_value)
    return ReproductionReport(tuple(rows), all(r.passed for r in rows), diagnostics)


def _diagnostics(opt_value: float) -> tuple[str, ...]:
    notes: list[str] = []
    ref = reference_optimal_angles()
    opt_state, _ = optimal_max_state()
    v_opt = bell_value(opt_state, ref)
    v_me = bell_value(maximally_entangled_state(_D4), ref)
    notes.append(
        "non-gating: the fixed reference angle table evaluates to "
        f"{v_opt:.6f} at the optimal max state and {v_me:.6f} at the "
        "maximally entangled state; the optimizer reaches 2.9727 and "
        "2.89624 there, so the table's phase convention does not match "
        "this probability model and it is recorded for reference only"
    )
    alt = t_coefficients_alt(zero_settings(_D4))
    alt_sum = sum(alt.values())
    notes.append(
        "non-gating: the alternative sign-convention T forms sum to "
        f"{alt_sum:.6f} at zero phases where the bilinear identity "
        "requires 2.0; all computations use the identity-consistent forms"
    )
    for d in (5, 6):
        report = lhv_bounds(Dimension(d))
        bound = Fraction(-2 * (d + 1), d - 1)
        relation = "equals" if report.min_value == bound else "exceeds"
        notes.append(
            f"non-gating: enumerated LHV min at d={d} is {report.min_value} "
            f"and {relation} the -2(d+1)/(d-1) bound {bound}"
        )
    notes.append(
        "non-gating: the 24x24 vertex enumeration dominates the "
        "two-branch closed forms; they agree at the tabulated optimal "
        "states, but some states admit strictly better enumeration "
        "candidates which the optimizer confirms as attainable "
        "(see tests/test_analytic.py)"
    )
    return tuple(notes)


SCAN_COLUMNS = ("r", "B1", "B2", "Imax", "S1", "S2", "Imin", "Fthr")


@dataclass(frozen=True)
class ScanSpec:
    """Grid over the two-parameter state family a = normalize(1, 1, r, r).

    This family contains the maximally entangled state (r = 1) and
    both closed-form optima.  noise_grid, when non-empty, adds noisy
    Imax annotations to JSON output; the CSV schema is fixed and
    ignores it.
    """

    r_from: float
    r_to: float
    steps: int
    family: str = "step"
    noise_grid: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.family != "step":
            raise ValidationError(f"unknown scan family {self.family!r}")
        if not isinstance(self.steps, int) or self.steps < 2:
            raise ValidationError(f"steps must be an int >= 2, got {self.steps!r}")
        if not (math.isfinite(self.r_from) and math.isfinite(self.r_to)):
            raise ValidationError("scan range must be finite")
        if not self.r_from < self.r_to:
            raise ValidationError(
                f"r_from must be < r_to, got {self.r_from!r} >= {self.r_to!r}"
            )
        for f in self.noise_grid:
            if not 0.0 <= f <= 1.0:
                raise ValidationError(f"noise fractions must lie in [0, 1], got {f!r}")


def scan_rows(spec: ScanSpec) -> list[dict]:
    """One row per grid point with the closed-form branch values."""
    rows = []
    for index in range(spec.steps):
        r = spec.r_from + (spec.r_to - spec.r_from) * index / (spec.steps - 1)
        state = make_state(_D4, (1.0, 1.0, r, r))
        bmax = branch_values_max(state)
        bmin = branch_values_min(state)
        row = {
            "r": r,
            "B1": bmax.b1,
            "B2": bmax.b2,
            "Imax": bmax.max,
            "S1": bmin.s1,
            "S2": bmin.s2,
            "Imin": bmin.min,
            "Fthr": threshold_noise(bmax.max),
        }
        if spec.noise_grid:
            row["noisy_Imax"] = {
                f"{f:g}": (1.0 - f) * bmax.max for f in spec.noise_grid
            }
        rows.append(row)
    return rows
