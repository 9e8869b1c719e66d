"""Command line interface.

Every subcommand reads delimited input, writes a JSON report with the
resolved configuration embedded, and (for the curve-shaped results)
renders figures next to the delimited output unless --no-plots is set.
Settings resolve as flags over config file over built-in defaults; the
config file holds `key = value` lines with `#` comments.

Exit codes: 0 success, 2 input error, 3 numerical failure, 4 property
violation.  Diagnostics stream to stderr as one JSON object per line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .analysis import (
    ScanProblem,
    critical_exponent_scan,
    lp_derivative_norm,
    verify_main_bound,
    weak_lp_quasinorm,
)
from .core import (
    Grid,
    RepresentationSpec,
    SampledCurve,
    read_curve_csv,
    read_grid2d_csv,
    read_tuple_csv,
)
from .covers import select_cover
from .errors import (
    AllZeroAtPoint,
    ClustersNotSeparated,
    CoverPropertyViolation,
    CsvFormatError,
    DiscontinuousAtZeroSet,
    DominantVanishes,
    ExponentOutOfRange,
    LengthMismatch,
    NoReconcilingElement,
    NonMonotoneGrid,
    NotAGroup,
    OrderTooHigh,
    OutOfRange,
    RaggedComponents,
    RefinementBudgetExhausted,
    RootSolveFailure,
    ShapeMismatch,
    VanishingDominant,
)
from .invariants import evaluate_sigma
from .lifting import (
    aq_distance,
    continuous_radical,
    continuous_roots,
    lift_grid_2d,
    read_lift_csv,
    write_lift_csv,
)
from .reduction import radical_selections
from .report import save_cover_figure, save_grid_figure, save_lift_figure, save_scan_figure, write_json_report, write_table

INPUT_ERRORS = (
    CsvFormatError,
    NonMonotoneGrid,
    LengthMismatch,
    RaggedComponents,
    OrderTooHigh,
    ShapeMismatch,
    NotAGroup,
    OutOfRange,
    ExponentOutOfRange,
    ValueError,
    OSError,
)
NUMERICAL_ERRORS = (
    RefinementBudgetExhausted,
    RootSolveFailure,
    DiscontinuousAtZeroSet,
    NoReconcilingElement,
    AllZeroAtPoint,
    VanishingDominant,
    DominantVanishes,
)
PROPERTY_ERRORS = (CoverPropertyViolation, ClustersNotSeparated)


def _emit(event: str, **fields) -> None:
    print(json.dumps({"event": event, **fields}, sort_keys=True), file=sys.stderr)


def _emit_diagnostics(diagnostics) -> None:
    for message in diagnostics:
        _emit("diagnostic", message=message)


def load_config_file(path) -> dict:
    """Parse `key = value` lines; values are JSON literals or raw strings."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            try:
                out[key] = json.loads(value)
            except json.JSONDecodeError:
                out[key] = value
    return out


def resolve_config(defaults: dict, args: argparse.Namespace) -> dict:
    """Defaults, overridden by the config file, overridden by flags."""
    resolved = dict(defaults)
    if getattr(args, "config", None):
        file_values = load_config_file(args.config)
        for key, value in file_values.items():
            if key not in resolved:
                raise ValueError(f"unknown config key {key!r}")
            resolved[key] = value
    for key in resolved:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    return resolved


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", help="output directory (default: current)")
    sub.add_argument("--config", help="config file with key = value lines")
    sub.add_argument("--seed", type=int, help="seed for sampled estimates")
    sub.add_argument(
        "--no-plots", dest="no_plots", action="store_const", const=True,
        help="skip figure rendering",
    )


def _outdir(resolved: dict) -> str:
    out = resolved.get("out") or "."
    os.makedirs(out, exist_ok=True)
    return out


def _parse_degrees(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(tok) for tok in str(value).split(",") if tok.strip())


def _lift_norms(lift, exponents=(1.0, 1.25, 1.5)) -> dict:
    curve = lift.as_curve()
    return {
        f"lp_{p:g}": lp_derivative_norm(curve, p, normalized=True).to_json()
        for p in exponents
    }


def cmd_radical(args: argparse.Namespace) -> int:
    defaults = {
        "input": None, "degree": 2, "out": ".", "seed": 0, "no_plots": False,
    }
    resolved = resolve_config(defaults, args)
    if not resolved["input"]:
        raise ValueError("--input is required")
    curve = read_curve_csv(resolved["input"])
    if curve.n_components != 1:
        raise ShapeMismatch("radical lifting expects a single-component curve")
    lift = continuous_radical(curve.component(0), int(resolved["degree"]))
    _emit_diagnostics(lift.diagnostics)
    if lift.budget_exhausted:
        raise RefinementBudgetExhausted("ambiguous cells remain at the depth limit")
    out = _outdir(resolved)
    write_lift_csv(os.path.join(out, "lift.csv"), lift)
    write_json_report(
        os.path.join(out, "report.json"),
        resolved,
        residual=lift.residual,
        n_nodes=len(lift.grid),
        n_branches=lift.n_branches,
        refinement_level=lift.refinement_level,
        norms=_lift_norms(lift),
    )
    if not resolved["no_plots"]:
        save_lift_figure(os.path.join(out, "lift.png"), lift)
    return 0


def cmd_roots(args: argparse.Namespace) -> int:
    defaults = {"input": None, "out": ".", "seed": 0, "no_plots": False}
    resolved = resolve_config(defaults, args)
    if not resolved["input"]:
        raise ValueError("--input is required")
    curve = read_curve_csv(resolved["input"])
    lift = continuous_roots(curve)
    _emit_diagnostics(lift.diagnostics)
    if lift.budget_exhausted:
        raise RefinementBudgetExhausted("ambiguous cells remain at the depth limit")
    out = _outdir(resolved)
    write_lift_csv(os.path.join(out, "lift.csv"), lift)
    write_json_report(
        os.path.join(out, "report.json"),
        resolved,
        residual=lift.residual,
        n_nodes=len(lift.grid),
        n_branches=lift.n_branches,
        refinement_level=lift.refinement_level,
        norms=_lift_norms(lift),
    )
    if not resolved["no_plots"]:
        save_lift_figure(os.path.join(out, "lift.png"), lift)
    return 0


def _builtin_problem(family: str, degree: int) -> ScanProblem:
    if family == "radical":
        spec = RepresentationSpec.cyclic(degree)
        return ScanProblem(spec=spec, oracle=lambda t: (complex(t),))
    if family == "roots":
        spec = RepresentationSpec.symmetric(degree)

        def oracle(t: float):
            row = [0j] * degree
            row[-1] = complex(t)
            return tuple(row)

        return ScanProblem(spec=spec, oracle=oracle)
    raise ValueError(f"unknown scan family {family!r}; use 'radical' or 'roots'")


def cmd_scan(args: argparse.Namespace) -> int:
    defaults = {
        "family": "radical", "degree": 2, "p_min": None, "p_max": None,
        "p_step": 0.1, "levels": 5, "initial_cells": 1024,
        "out": ".", "seed": 0, "no_plots": False,
    }
    resolved = resolve_config(defaults, args)
    problem = _builtin_problem(str(resolved["family"]), int(resolved["degree"]))
    d_prime = problem.spec.critical_exponent
    p_min = resolved["p_min"] if resolved["p_min"] is not None else 1.0
    p_max = resolved["p_max"] if resolved["p_max"] is not None else round(1.6 * d_prime, 2)
    step = float(resolved["p_step"])
    n_steps = int(round((p_max - p_min) / step))
    if n_steps < 1 or p_max <= p_min:
        raise ValueError("empty exponent grid")
    p_grid = np.linspace(p_min, p_min + n_steps * step, n_steps + 1)
    resolved["p_min"], resolved["p_max"] = float(p_min), float(p_grid[-1])
    report = critical_exponent_scan(
        problem,
        p_grid,
        levels=int(resolved["levels"]),
        n_initial=int(resolved["initial_cells"]),
    )
    out = _outdir(resolved)
    write_json_report(os.path.join(out, "report.json"), resolved, scan=report.to_json())
    columns = [("p", report.p_grid)]
    for level, row in enumerate(report.values):
        columns.append((f"norm_n{report.grid_sizes[level]}", row))
    write_table(os.path.join(out, "norms.dat"), columns)
    if not resolved["no_plots"]:
        save_scan_figure(os.path.join(out, "scan.png"), report)
    return 0


def cmd_cover(args: argparse.Namespace) -> int:
    defaults = {
        "input": None, "degrees": None, "L": 0.5, "D": 0.25,
        "out": ".", "seed": 0, "no_plots": False,
    }
    resolved = resolve_config(defaults, args)
    if not resolved["input"]:
        raise ValueError("--input is required")
    curve = read_curve_csv(resolved["input"])
    if resolved["degrees"] is None:
        degrees = tuple(range(1, curve.n_components + 1))
    else:
        degrees = _parse_degrees(resolved["degrees"])
    resolved["degrees"] = list(degrees)
    sel = radical_selections(curve, degrees)
    _emit_diagnostics(sel.diagnostics)
    cover = select_cover(sel, float(resolved["L"]), float(resolved["D"]))
    out = _outdir(resolved)
    with open(os.path.join(out, "cover.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(cover.to_json(), sort_keys=True, indent=2) + "\n")
    write_json_report(
        os.path.join(out, "report.json"),
        resolved,
        n_selected=len(cover.selected),
        n_built=len(cover.built),
        covered_span=cover.covered_span,
        total_length=cover.total_length,
        max_overlap=cover.max_overlap,
        kinds={
            "first": sum(1 for j in cover.selected if j.kind == "first"),
            "second": sum(1 for j in cover.selected if j.kind == "second"),
        },
    )
    if not resolved["no_plots"]:
        save_cover_figure(os.path.join(out, "cover.png"), sel, cover)
    return 0


def _spec_from(resolved: dict) -> RepresentationSpec:
    kind = str(resolved["kind"])
    degree = int(resolved["degree"])
    if kind == "cyclic":
        return RepresentationSpec.cyclic(degree)
    if kind == "symmetric":
        return RepresentationSpec.symmetric(degree)
    raise ValueError(f"unsupported kind {kind!r}; use 'cyclic' or 'symmetric'")


def cmd_verify(args: argparse.Namespace) -> int:
    defaults = {
        "input": None, "lift": None, "kind": "cyclic", "degree": 2,
        "p": None, "tol": 1e-8, "constant": None,
        "out": ".", "seed": 0, "no_plots": False,
    }
    resolved = resolve_config(defaults, args)
    if not resolved["input"] or not resolved["lift"]:
        raise ValueError("--input and --lift are required")
    spec = _spec_from(resolved)
    curve = read_curve_csv(resolved["input"])
    lift = read_lift_csv(resolved["lift"])
    if len(lift.grid) != len(curve.grid) or not np.array_equal(
        lift.grid.nodes, curve.grid.nodes
    ):
        raise LengthMismatch("curve and lift must share the grid")

    # recombination: the invariant map applied to the branches must
    # reproduce the input samples
    residual = 0.0
    for i in range(len(curve.grid)):
        if spec.kind == "cyclic":
            sigma = evaluate_sigma(spec, lift.branches[0, i, 0])
        else:
            sigma = evaluate_sigma(spec, lift.branches[:, i, 0])
        residual = max(residual, float(np.max(np.abs(sigma.values - curve.values[i]))))

    p = resolved["p"]
    if p is None:
        p = 0.5 * (1.0 + spec.critical_exponent)
        resolved["p"] = p
    bound = verify_main_bound(curve, lift, spec, float(p), seed=int(resolved["seed"]))
    payload = {
        "residual": residual,
        "tol": float(resolved["tol"]),
        "bound": bound.to_json(),
        "weak_norm_at_critical": weak_lp_quasinorm(
            lift.as_curve(), spec.critical_exponent, normalized=True
        ).to_json()
        if np.isfinite(spec.critical_exponent)
        else None,
    }
    ok = residual <= float(resolved["tol"])
    if resolved["constant"] is not None and not bound.degenerate:
        ok = ok and bound.ratio <= float(resolved["constant"])
    payload["ok"] = bool(ok)
    out = _outdir(resolved)
    write_json_report(os.path.join(out, "report.json"), resolved, verify=payload)
    if not ok:
        _emit("property_violation", residual=residual, ratio=bound.ratio)
        return 4
    return 0


def cmd_qdist(args: argparse.Namespace) -> int:
    defaults = {"left": None, "right": None, "out": ".", "seed": 0, "no_plots": False}
    resolved = resolve_config(defaults, args)
    if not resolved["left"] or not resolved["right"]:
        raise ValueError("--left and --right are required")
    nodes_a, pts_a = read_tuple_csv(resolved["left"])
    nodes_b, pts_b = read_tuple_csv(resolved["right"])
    if len(pts_a) != len(pts_b):
        raise LengthMismatch("tuple curves have different node counts")
    if not np.allclose(nodes_a, nodes_b):
        raise LengthMismatch("tuple curves are sampled on different grids")
    dists = [aq_distance(p, q) for p, q in zip(pts_a, pts_b)]
    out = _outdir(resolved)
    write_json_report(
        os.path.join(out, "report.json"),
        resolved,
        distances={
            "max": float(np.max(dists)),
            "mean": float(np.mean(dists)),
            "n_nodes": len(dists),
        },
    )
    write_table(os.path.join(out, "distances.dat"), [("t", nodes_a), ("distance", dists)])
    print(f"{float(np.max(dists)):.17g}")
    return 0


def cmd_grid2d(args: argparse.Namespace) -> int:
    defaults = {
        "input": None, "kind": "cyclic", "degree": 2,
        "out": ".", "seed": 0, "no_plots": False,
    }
    resolved = resolve_config(defaults, args)
    if not resolved["input"]:
        raise ValueError("--input is required")
    spec = _spec_from(resolved)
    field = read_grid2d_csv(resolved["input"])
    result = lift_grid_2d(field, spec)
    out = _outdir(resolved)
    with open(os.path.join(out, "monodromy.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(result.report.to_json(), sort_keys=True, indent=2) + "\n")
    write_json_report(
        os.path.join(out, "report.json"),
        resolved,
        monodromy=result.report.to_json(),
        lifted=result.values is not None,
    )
    if result.values is not None:
        from .core import SampledGrid2D, write_grid2d_csv

        sheets = SampledGrid2D(
            x_grid=field.x_grid, y_grid=field.y_grid,
            values=result.values, mask=field.mask,
        )
        write_grid2d_csv(os.path.join(out, "sheets.csv"), sheets)
    if not resolved["no_plots"]:
        save_grid_figure(os.path.join(out, "grid2d.png"), result)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbitlift",
        description="Continuous lifts of invariant curves and their derivative norms.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("radical", help="continuous d-th root of a scalar curve")
    p.add_argument("--input", help="curve CSV (t,re_1,im_1)")
    p.add_argument("--degree", type=int, help="root order d >= 1")
    _common_flags(p)
    p.set_defaults(func=cmd_radical)

    p = subs.add_parser("roots", help="continuous root system of monic coefficients")
    p.add_argument("--input", help="curve CSV of elementary symmetric values")
    _common_flags(p)
    p.set_defaults(func=cmd_roots)

    p = subs.add_parser("scan", help="derivative norms across an exponent grid")
    p.add_argument("--family", help="built-in singular family: radical or roots")
    p.add_argument("--degree", type=int, help="group degree d >= 2")
    p.add_argument("--p-min", dest="p_min", type=float)
    p.add_argument("--p-max", dest="p_max", type=float)
    p.add_argument("--p-step", dest="p_step", type=float)
    p.add_argument("--levels", type=int, help="number of refinement levels")
    p.add_argument("--initial-cells", dest="initial_cells", type=int)
    _common_flags(p)
    p.set_defaults(func=cmd_scan)

    p = subs.add_parser("cover", help="prepared-interval cover of the nonvanishing set")
    p.add_argument("--input", help="coefficient curve CSV")
    p.add_argument("--degrees", help="comma-separated component degrees")
    p.add_argument("--L", dest="L", type=float, help="slope parameter, positive")
    p.add_argument("--D", dest="D", type=float, help="budget fraction, positive")
    _common_flags(p)
    p.set_defaults(func=cmd_cover)

    p = subs.add_parser("verify", help="check a lift against its invariant curve")
    p.add_argument("--input", help="curve CSV")
    p.add_argument("--lift", help="lift CSV (t,branch,re,im)")
    p.add_argument("--kind", help="cyclic or symmetric")
    p.add_argument("--degree", type=int)
    p.add_argument("--p", type=float, help="exponent below the critical one")
    p.add_argument("--tol", type=float, help="recombination tolerance")
    p.add_argument("--constant", type=float, help="enforced bound constant")
    _common_flags(p)
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("qdist", help="orbit distance between two tuple curves")
    p.add_argument("--left", help="tuple CSV (t,point,re_1,im_1,...)")
    p.add_argument("--right", help="tuple CSV")
    _common_flags(p)
    p.set_defaults(func=cmd_qdist)

    p = subs.add_parser("grid2d", help="lift a two-dimensional sampled field")
    p.add_argument("--input", help="grid CSV (x,y,re_1,im_1,...)")
    p.add_argument("--kind", help="cyclic or symmetric")
    p.add_argument("--degree", type=int)
    _common_flags(p)
    p.set_defaults(func=cmd_grid2d)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PROPERTY_ERRORS as exc:
        _emit("error", type=type(exc).__name__, message=str(exc))
        return 4
    except NUMERICAL_ERRORS as exc:
        _emit("error", type=type(exc).__name__, message=str(exc))
        return 3
    except INPUT_ERRORS as exc:
        _emit("error", type=type(exc).__name__, message=str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
