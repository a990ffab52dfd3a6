"""Command-line interface: sweeps, figure-grid presets and self-validation.

Output is CSV (or a JSON mirror with a metadata object); files contain no
timestamps or environment details, so identical invocations produce identical
bytes.  Exit codes: 0 success, 1 bad flags, 2 sweep completed with
nonconvergent grid points.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .errors import EtsError, UnsupportedAngleSetError
from .inequalities import INEQUALITIES, AngleSet, InequalitySpec
from .integration import QuadratureConfig
from .measurement import EffectiveRotation
from .oracles import sasa_closed, svetlichny_ghz4_closed, svetlichny_ghz_closed
from .states import FamilyKind
from .sweeps import SweepPlan, run_sweep
from .validation import CHECKS, run_checks

_COLUMNS = ("family", "inequality", "V", "d", "eta", "value", "err",
            "lr_bound", "quantum_max", "violated")


class _Parser(argparse.ArgumentParser):
    """Parser whose flag errors exit with status 1, not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _jsonable(x: float):
    if isinstance(x, float) and math.isnan(x):
        return None
    return float(_fmt(x))


def _parse_grid(text: str, flag: str) -> tuple[float, ...]:
    """Grid syntax: a comma list ('1,2,5') or a linspace range ('a:b:n')."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError("range must be a:b:n")
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ValueError("range point count must be >= 1")
            return tuple(float(v) for v in np.linspace(a, b, n))
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ValueError(f"invalid {flag} grid {text!r}: {exc}") from None


def _parse_angle_list(text: str, spec: InequalitySpec) -> AngleSet:
    """Explicit angles: per-party 'θ,γ[,θ,γ]' blocks joined by ';'."""
    blocks = text.split(";")
    if len(blocks) != spec.parties:
        raise ValueError(
            f"expected angle blocks for {spec.parties} parties, got {len(blocks)}")
    angles = []
    for p, block in enumerate(blocks):
        numbers = [float(v) for v in block.split(",") if v.strip()]
        expected = 2 * spec.settings_per_party[p]
        if len(numbers) != expected:
            raise ValueError(
                f"party {p} needs {expected} numbers (θ,γ per setting), got {len(numbers)}")
        angles.append(tuple(
            EffectiveRotation(numbers[2 * k], numbers[2 * k + 1])
            for k in range(spec.settings_per_party[p])))
    return tuple(angles)


def _write_output(rows: list[dict], metadata: dict, out: str | None, fmt: str) -> None:
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(_COLUMNS)
        for row in rows:
            writer.writerow([
                row["family"], row["inequality"],
                _fmt(row["V"]), _fmt(row["d"]), _fmt(row["eta"]),
                _fmt(row["value"]), _fmt(row["err"]),
                _fmt(row["lr_bound"]), _fmt(row["quantum_max"]),
                "true" if row["violated"] else "false",
            ])
        text = buffer.getvalue()
    else:
        payload = {
            "metadata": metadata,
            "rows": [
                {
                    "family": row["family"], "inequality": row["inequality"],
                    "V": _jsonable(row["V"]), "d": _jsonable(row["d"]),
                    "eta": _jsonable(row["eta"]), "value": _jsonable(row["value"]),
                    "err": _jsonable(row["err"]), "lr_bound": _jsonable(row["lr_bound"]),
                    "quantum_max": _jsonable(row["quantum_max"]),
                    "violated": bool(row["violated"]),
                }
                for row in rows
            ],
        }
        text = json.dumps(payload, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as handle:
            handle.write(text)


def _config_metadata(cfg: QuadratureConfig) -> dict:
    return {
        "nodes_per_axis": cfg.nodes_per_axis,
        "mc_samples": cfg.mc_samples,
        "mc_seed": cfg.mc_seed,
        "method": cfg.method.value,
        "rel_tol": cfg.rel_tol,
    }


def cmd_scan(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    spec = INEQUALITIES[args.inequality]
    kind = FamilyKind(args.family)
    cfg = QuadratureConfig(nodes_per_axis=args.nodes, mc_samples=args.mc_samples,
                           mc_seed=args.seed)
    if args.angles == "explicit":
        if not args.angle_list:
            parser.error("--angles explicit requires --angle-list")
        try:
            angles: AngleSet | str = _parse_angle_list(args.angle_list, spec)
        except ValueError as exc:
            parser.error(str(exc))
    else:
        angles = args.angles

    try:
        plan = SweepPlan(
            family=kind, spec=spec,
            V_grid=_parse_grid(args.V, "--V"),
            d_grid=_parse_grid(args.d, "--d"),
            eta_grid=_parse_grid(args.eta, "--eta"),
            angles=angles, cfg=cfg)
        result = run_sweep(plan)
    except UnsupportedAngleSetError as exc:
        parser.error(str(exc))
    except ValueError as exc:
        parser.error(str(exc))

    provenances = sorted({row.provenance for row in result.rows})
    rows = [
        {
            "family": kind.value, "inequality": spec.name,
            "V": row.V, "d": row.d, "eta": row.eta,
            "value": row.value, "err": row.err,
            "lr_bound": spec.lr_bound, "quantum_max": spec.quantum_max,
            "violated": row.violated,
        }
        for row in result.rows
    ]
    metadata = {
        "version": __version__,
        "family": kind.value,
        "inequality": spec.name,
        "config": _config_metadata(cfg),
        "angles": {"mode": args.angles, "provenance": provenances},
    }
    _write_output(rows, metadata, args.out, args.format)
    return 2 if any(row.failed for row in result.rows) else 0


def _figure_d_grid(V: float, points: int = 60) -> tuple[float, ...]:
    return tuple(float(v) for v in np.geomspace(0.1, 10.0 * math.sqrt(V), points))


def _closed_form_rows(kind: FamilyKind, spec: InequalitySpec, eta: float,
                      V_values: Sequence[float], formula) -> list[dict]:
    rows = []
    for V in V_values:
        for d in _figure_d_grid(V):
            value = formula(V, d, eta)
            rows.append({
                "family": kind.value, "inequality": spec.name,
                "V": V, "d": d, "eta": eta, "value": value, "err": 0.0,
                "lr_bound": spec.lr_bound, "quantum_max": spec.quantum_max,
                "violated": value > spec.lr_bound,
            })
    return rows


def _sweep_rows(kind: FamilyKind, spec: InequalitySpec, eta: float,
                V_values: Sequence[float]) -> list[dict]:
    rows = []
    for V in V_values:
        plan = SweepPlan(family=kind, spec=spec, V_grid=(V,),
                         d_grid=_figure_d_grid(V), eta_grid=(eta,))
        for row in run_sweep(plan).rows:
            rows.append({
                "family": kind.value, "inequality": spec.name,
                "V": row.V, "d": row.d, "eta": row.eta,
                "value": row.value, "err": row.err,
                "lr_bound": spec.lr_bound, "quantum_max": spec.quantum_max,
                "violated": row.violated,
            })
    return rows


_FIGURE_HELP = {
    "fig2": "three-party GHZ-type Svetlichny surface, closed form, η=0.1",
    "fig3": "splitter vs conditional three-party crossing curves, η=0.3, V∈{5,10}",
    "fig4": "W-type Svetlichny curve, η=1, V=10",
    "fig5": "four-party GHZ-type Svetlichny surface, closed form, η=0.1",
    "fig6": "stabilizer-functional surface on the cluster type, closed form, η=1",
    "fig7": "WWZB curves on the cluster type, η=1, V∈{1,10}",
}

_SURFACE_V = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0)


def _figure_rows(name: str) -> list[dict]:
    if name == "fig2":
        return _closed_form_rows(
            FamilyKind.GHZ3_CONDITIONAL, INEQUALITIES["svetlichny3"], 0.1,
            _SURFACE_V, lambda V, d, eta: svetlichny_ghz_closed(V, d, eta))
    if name == "fig3":
        rows = []
        for kind in (FamilyKind.GHZ3_BEAM_SPLITTER, FamilyKind.GHZ3_CONDITIONAL):
            rows.extend(_sweep_rows(kind, INEQUALITIES["svetlichny3"], 0.3, (5.0, 10.0)))
        return rows
    if name == "fig4":
        return _sweep_rows(FamilyKind.W3, INEQUALITIES["svetlichny3"], 1.0, (10.0,))
    if name == "fig5":
        return _closed_form_rows(
            FamilyKind.GHZ4_CONDITIONAL, INEQUALITIES["svetlichny4"], 0.1,
            _SURFACE_V, lambda V, d, eta: svetlichny_ghz4_closed(V, d, eta))
    if name == "fig6":
        return _closed_form_rows(
            FamilyKind.CLUSTER4_CONDITIONAL, INEQUALITIES["sasa"], 1.0,
            (1.0, 2.0, 5.0, 10.0, 50.0, 100.0, 1000.0),
            lambda V, d, eta: sasa_closed(V, d, eta))
    if name == "fig7":
        return _sweep_rows(FamilyKind.CLUSTER4_CONDITIONAL, INEQUALITIES["wwzb4"], 1.0,
                           (1.0, 10.0))
    raise ValueError(f"unknown figure {name!r}")


def cmd_figure(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    rows = _figure_rows(args.name)
    metadata = {
        "version": __version__,
        "figure": args.name,
        "description": _FIGURE_HELP[args.name],
        "grid": "60 d-points log-spaced on [0.1, 10√V] per V",
    }
    out = args.out if args.out is not None else f"{args.name}.{args.format}"
    _write_output(rows, metadata, out, args.format)
    return 0


def cmd_validate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    names = None
    if args.checks:
        names = [c.strip() for c in args.checks.split(",") if c.strip()]
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            parser.error(f"unknown checks: {', '.join(unknown)}")
    try:
        results = run_checks(names, flip_term=args.flip_sign)
    except EtsError as exc:
        sys.stderr.write(f"validation aborted: {exc}\n")
        return 1
    all_passed = True
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        all_passed = all_passed and result.passed
        print(f"{status} {result.name}: {result.detail}")
    return 0 if all_passed else 1


def build_parser() -> _Parser:
    parser = _Parser(prog="etsbell",
                     description="Bell tests on entangled thermal states "
                                 "with dichotomized homodyne readout.")
    parser.add_argument("--version", action="version", version=f"etsbell {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    scan = sub.add_parser("scan", help="evaluate an inequality over a (V, d, η) grid")
    scan.add_argument("--family", required=True, choices=[k.value for k in FamilyKind])
    scan.add_argument("--inequality", required=True, choices=sorted(INEQUALITIES))
    scan.add_argument("--V", required=True, help="comma list or range a:b:n")
    scan.add_argument("--d", required=True, help="comma list or range a:b:n")
    scan.add_argument("--eta", default="1", help="comma list or range a:b:n")
    scan.add_argument("--angles", default="canonical",
                      choices=("canonical", "optimize", "explicit"))
    scan.add_argument("--angle-list", default=None,
                      help="explicit angles: 'θ,γ[,θ,γ]' per party, parties joined by ';'")
    scan.add_argument("--nodes", type=int, default=40, help="quadrature nodes per axis")
    scan.add_argument("--mc-samples", type=int, default=200_000)
    scan.add_argument("--seed", type=int, default=20260815)
    scan.add_argument("--out", default=None, help="output path (default: stdout)")
    scan.add_argument("--format", default="csv", choices=("csv", "json"))

    figure = sub.add_parser("figure", help="emit the grid behind a named figure")
    figure.add_argument("name", choices=sorted(_FIGURE_HELP))
    figure.add_argument("--out", default=None, help="output path (default: <name>.<format>)")
    figure.add_argument("--format", default="csv", choices=("csv", "json"))

    validate = sub.add_parser("validate", help="run the oracle-vs-numeric check suite")
    validate.add_argument("--checks", default=None,
                          help="comma-separated subset of checks to run")
    validate.add_argument("--flip-sign", type=int, default=None, metavar="TERM",
                          help="mutation mode: flip one term sign in the LR-bound check")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"scan": cmd_scan, "figure": cmd_figure, "validate": cmd_validate}
    try:
        return handlers[args.command](args, parser)
    except SystemExit:
        raise
    except EtsError as exc:
        sys.stderr.write(f"etsbell: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
