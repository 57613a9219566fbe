"""Command-line front end.

Subcommands: eval, lhv, optimize, analytic, reproduce, scan, sample.
All machine output is JSON (or CSV for scan) with floats rounded to 12
significant digits.  Exit codes: 0 success, 1 validation error,
2 reproduction failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

import numpy as np

from .model import (
    BellError,
    Dimension,
    KernelVariant,
    MeasurementSettings,
    PhaseVector,
    PureState,
    ValidationError,
    make_state,
    maximally_entangled_state,
    zero_settings,
)
from .analytic import (
    branch_values_max,
    branch_values_min,
    gamma_constants,
    optimal_max_state,
    optimal_min_state,
    sorted_magnitudes,
    threshold_noise,
    vertex_candidates,
)
from .engine import JointProbabilityTable, correlation_q, joint_probabilities, sample_experiment
from .lhv import lhv_bounds
from .optimize import Direction, OptimizerConfig, optimize_angles, optimize_joint
from .report import (
    SCAN_COLUMNS,
    ReproductionReport,
    ScanSpec,
    build_reproduction_report,
    scan_rows,
)

__all__ = ["main", "main_entry"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_REPRODUCTION = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad arguments; the CLI contract
    # reserves 2 for reproduction failures, so remap to 1.
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _fmt(value: float) -> float:
    return float(f"{float(value):.12g}")


def _round_floats(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.floating):
        return _fmt(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _emit_json(obj) -> None:
    print(json.dumps(_round_floats(obj), indent=2, sort_keys=True))


def _variant(name: str) -> KernelVariant:
    return KernelVariant.PLUS if name == "plus" else KernelVariant.MINUS


def _parse_state(text: str, d: int | None) -> PureState:
    parts = [p.strip() for p in text.split(",")]
    if any(p == "" for p in parts):
        raise ValidationError(f"malformed state spec {text!r}")
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise ValidationError(f"malformed state spec {text!r}") from exc
    dim = Dimension(d if d is not None else len(values))
    return make_state(dim, values)


def _load_angles(path: str, d: int | None) -> MeasurementSettings:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ValidationError(f"cannot read angle file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"angle file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError(f"angle file {path!r} must hold a JSON object")
    missing = {"d", "A1", "A2", "B1", "B2"} - raw.keys()
    if missing:
        raise ValidationError(f"angle file {path!r} lacks keys {sorted(missing)}")
    file_d = raw["d"]
    if not isinstance(file_d, int) or file_d < 2:
        raise ValidationError(f"angle file {path!r} has invalid d = {file_d!r}")
    if d is not None and file_d != d:
        raise ValidationError(
            f"angle file dimension {file_d} does not match expected {d}"
        )
    dim = Dimension(file_d)
    vectors = []
    for key in ("A1", "A2", "B1", "B2"):
        entry = raw[key]
        if not isinstance(entry, list) or len(entry) != file_d or \
                not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in entry):
            raise ValidationError(
                f"angle file key {key!r} must list {file_d} numbers"
            )
        vectors.append(PhaseVector(dim, tuple(float(v) for v in entry)))
    return MeasurementSettings(dim, *vectors)


def _angles_dict(settings: MeasurementSettings) -> dict:
    return {
        "d": settings.dim.d,
        "A1": list(settings.a1.phases),
        "A2": list(settings.a2.phases),
        "B1": list(settings.b1.phases),
        "B2": list(settings.b2.phases),
    }


def _table_dict(table: JointProbabilityTable) -> dict:
    return {
        f"{i}{j}": table.setting(i, j).tolist()
        for i in (1, 2) for j in (1, 2)
    }


def cmd_eval(args) -> int:
    state = _parse_state(args.state, args.d)
    if args.angles:
        settings = _load_angles(args.angles, state.dim.d)
    else:
        settings = zero_settings(state.dim)
    noise = float(args.noise)
    if not 0.0 <= noise <= 1.0:
        raise ValidationError(f"noise fraction must lie in [0, 1], got {args.noise!r}")
    variant = _variant(args.variant)
    table = joint_probabilities(state, settings)
    if noise > 0.0:
        d = state.dim.d
        table = JointProbabilityTable(
            state.dim,
            (1.0 - noise) * table.probabilities + noise / d**2,
        )
    q = {f"Q{i}{j}": correlation_q(table, i, j, variant)
         for i in (1, 2) for j in (1, 2)}
    value = q["Q11"] + q["Q12"] - q["Q21"] + q["Q22"]
    record = {
        "d": state.dim.d,
        "variant": args.variant,
        "noise": noise,
        "state": list(state.coefficients),
        "I": value,
        **q,
        "probabilities": _table_dict(table),
    }
    if value > 2.0:
        record["threshold_noise"] = threshold_noise(value)
    _emit_json(record)
    return EXIT_OK


def cmd_lhv(args) -> int:
    report = lhv_bounds(Dimension(args.d), _variant(args.variant))
    _emit_json({
        "d": args.d,
        "variant": args.variant,
        "max": str(report.max_value),
        "min": str(report.min_value),
        "argmax": list(report.argmax.outcomes),
        "argmin": list(report.argmin.outcomes),
        "strategies_scanned": report.strategies_scanned,
    })
    return EXIT_OK


def cmd_optimize(args) -> int:
    variant = _variant(args.variant)
    direction = Direction.MAXIMIZE if args.direction == "max" else Direction.MINIMIZE
    config = OptimizerConfig(
        restarts=args.restarts,
        seed=args.seed,
        direction=direction,
        free_state=args.free_state,
    )
    if args.free_state:
        if args.state is not None:
            raise ValidationError("--free-state optimizes the state; drop --state")
        if args.d is None:
            raise ValidationError("--free-state requires --d")
        run = optimize_joint(Dimension(args.d), config, variant)
    else:
        if args.state is not None:
            state = _parse_state(args.state, args.d)
        elif args.d is not None:
            state = maximally_entangled_state(Dimension(args.d))
        else:
            raise ValidationError("optimize needs --state or --d")
        run = optimize_angles(state, config, variant)
    best = run.best
    assert best.settings is not None
    angles = _angles_dict(best.settings)
    record = {
        "direction": args.direction,
        "variant": args.variant,
        "restarts": args.restarts,
        "seed": args.seed,
        "value": best.value,
        "converged": run.converged,
        "iterations_used": run.iterations_used,
        "per_restart_values": list(run.per_restart_values),
        "state": list(best.state.coefficients),
        "angles": angles,
    }
    if args.export_angles:
        with open(args.export_angles, "w", encoding="utf-8") as handle:
            json.dump(_round_floats(angles), handle, indent=2, sort_keys=True)
            handle.write("\n")
    _emit_json(record)
    return EXIT_OK


def cmd_analytic(args) -> int:
    g = gamma_constants()
    if args.state is None:
        max_state, max_value = optimal_max_state()
        min_state, min_value = optimal_min_state()
        me_value = g.gamma1 + 2.0 * g.gamma2 + 3.0 * g.gamma3
        threshold_me = threshold_noise(me_value)
        threshold_opt = threshold_noise(max_value)
        _emit_json({
            "gamma1": g.gamma1,
            "gamma2": g.gamma2,
            "gamma3": g.gamma3,
            "max_entangled": {
                "value": me_value,
                "threshold_noise": threshold_me,
            },
            "optimal_max": {
                "state": list(max_state.coefficients),
                "value": max_value,
                "threshold_noise": threshold_opt,
            },
            "optimal_min": {
                "state": list(min_state.coefficients),
                "value": min_value,
            },
            "noise_resistance_gain": (threshold_opt - threshold_me) / threshold_me,
        })
        return EXIT_OK
    state = _parse_state(args.state, 4)
    bmax = branch_values_max(state)
    bmin = branch_values_min(state)
    vertices = vertex_candidates(state)
    witness_max, witness_min = vertices.witnesses
    record = {
        "state": list(state.coefficients),
        "sorted_magnitudes": list(sorted_magnitudes(state).A),
        "B1": bmax.b1,
        "B2": bmax.b2,
        "Imax": bmax.max,
        "S1": bmin.s1,
        "S2": bmin.s2,
        "Imin": bmin.min,
        "vertex_max": vertices.max,
        "vertex_min": vertices.min,
        "vertex_max_witness": {
            "table": witness_max.pattern.table_id,
            "row": witness_max.pattern.row,
            "assignment": list(witness_max.assignment),
        },
        "vertex_min_witness": {
            "table": witness_min.pattern.table_id,
            "row": witness_min.pattern.row,
            "assignment": list(witness_min.assignment),
        },
    }
    if bmax.max > 0.0:
        record["Fthr"] = threshold_noise(bmax.max)
    _emit_json(record)
    return EXIT_OK


def _print_report(report: ReproductionReport) -> None:
    width = max(len(row.label) for row in report.rows)
    for row in report.rows:
        status = "PASS" if row.passed else "FAIL"
        print(
            f"{row.label:<{width}}  expected {row.expected:>15.10g}  "
            f"computed {row.computed:>17.12g}  tol {row.tolerance:>7.1e}  "
            f"{status}  [{row.provenance}]"
        )
    print()
    for note in report.diagnostics:
        print(f"note: {note}")
    print()
    print(f"overall: {'PASS' if report.overall_pass else 'FAIL'}")


def cmd_reproduce(args) -> int:
    report = build_reproduction_report(restarts=args.restarts, seed=args.seed)
    if args.json:
        _emit_json({
            "rows": [
                {
                    "label": row.label,
                    "expected": row.expected,
                    "computed": row.computed,
                    "tolerance": row.tolerance,
                    "pass": row.passed,
                    "provenance": row.provenance,
                }
                for row in report.rows
            ],
            "overall_pass": report.overall_pass,
            "diagnostics": list(report.diagnostics),
        })
    else:
        _print_report(report)
    return EXIT_OK if report.overall_pass else EXIT_REPRODUCTION


def cmd_scan(args) -> int:
    spec = ScanSpec(r_from=args.r_from, r_to=args.r_to, steps=args.steps)
    rows = scan_rows(spec)
    if args.json:
        _emit_json({"family": spec.family, "rows": rows})
        return EXIT_OK
    stream = open(args.csv, "w", encoding="utf-8", newline="") if args.csv else sys.stdout
    try:
        writer = csv.writer(stream)
        writer.writerow(SCAN_COLUMNS)
        for row in rows:
            writer.writerow([f"{row[c]:.12g}" for c in SCAN_COLUMNS])
    finally:
        if args.csv:
            stream.close()
    return EXIT_OK


def cmd_sample(args) -> int:
    state = _parse_state(args.state, args.d)
    if args.angles:
        settings = _load_angles(args.angles, state.dim.d)
    else:
        settings = zero_settings(state.dim)
    estimate = sample_experiment(state, settings, args.shots, args.seed,
                                 _variant(args.variant))
    counts = {
        f"{i}{j}": estimate.counts[i - 1, j - 1].tolist()
        for i in (1, 2) for j in (1, 2)
    }
    _emit_json({
        "d": state.dim.d,
        "variant": args.variant,
        "shots_per_setting": estimate.shots_per_setting,
        "seed": args.seed,
        "estimate": estimate.value_estimate,
        "std_error": estimate.std_error,
        "counts": counts,
    })
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="bellmp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, state_required=False):
        p.add_argument("--d", type=int, default=None, help="outcome dimension")
        p.add_argument("--state", required=state_required,
                       help="comma-separated coefficients, auto-normalized")
        p.add_argument("--variant", choices=("plus", "minus"), default="plus")

    p = sub.add_parser("eval", help="Bell value of a state at fixed angles")
    add_common(p, state_required=True)
    p.add_argument("--angles", help="angle file (JSON)")
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("lhv", help="exact classical bounds by enumeration")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--variant", choices=("plus", "minus"), default="plus")
    p.set_defaults(func=cmd_lhv)

    p = sub.add_parser("optimize", help="numerically optimize the Bell value")
    add_common(p)
    p.add_argument("--direction", choices=("max", "min"), default="max")
    p.add_argument("--free-state", action="store_true")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--export-angles", metavar="PATH",
                   help="write the optimizing angles as an angle file")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("analytic", help="closed-form branch values and vertices")
    p.add_argument("--state", default=None,
                   help="d=4 coefficients; omit for the global constants")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("reproduce", help="recompute and check the headline numbers")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("scan", help="branch values over the (1,1,r,r) family")
    p.add_argument("--from", dest="r_from", type=float, default=0.0)
    p.add_argument("--to", dest="r_to", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--csv", metavar="PATH", help="write CSV to a file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("sample", help="finite-shot simulated experiment")
    add_common(p, state_required=True)
    p.add_argument("--angles", help="angle file (JSON)")
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except BellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main_entry() -> None:
    sys.exit(main())
