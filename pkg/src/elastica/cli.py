"""Command-line front end.

Subcommands: dist, shape-dist, exp, geodesic, validate.  JSON is the
canonical output format (CSV export for path grids); payloads are
deterministic, with the timestamp confined to a header that --no-header
drops for byte-comparison workflows.

Exit codes: 0 success, 2 parse/validation failure, 3 solver did not
converge (report still emitted), 4 oracle failure in validate.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys

from . import __version__
from . import io as eio
from . import manifold as manifold_mod
from .dcurve import resample
from .errors import ElasticaError, NoConvergence
from .geodesic_engine import (
    ShootingConfig,
    exponential_map,
    geodesic_bvp,
    shape_distance,
    slice_energy,
)
from .oracles import run_validation


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ELASTICA_THREADS", "1")))
    except ValueError:
        return 1


def _emit(payload: dict, args) -> None:
    doc = payload
    if not args.no_header:
        doc = {
            "header": {
                "tool": "elastica",
                "version": __version__,
                "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            },
            **payload,
        }
    text = json.dumps(doc, indent=1, sort_keys=False) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args) -> ShootingConfig:
    return ShootingConfig(
        epsilon=args.eps,
        max_iter=args.max_iter,
        tol_endpoint=args.tol,
        damping=args.damping,
    )


def _manifold_override(args):
    if args.manifold is None:
        return None
    kind, _, dim = args.manifold.partition(":")
    try:
        return manifold_mod.from_json({"kind": kind, "ambient_dim": int(dim)})
    except Exception as err:
        raise eio.ParseError(f"--manifold {args.manifold!r}: {err}")


def _load_pair(args):
    override = _manifold_override(args)
    a = eio.load_curve(args.curve_a, override)
    b = eio.load_curve(args.curve_b, override)
    if args.resample:
        import numpy as np

        grid = np.linspace(0.0, 1.0, args.resample + 1)
        a, b = resample(a, grid), resample(b, grid)
    return a, b


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eps", type=float, default=1 / 32, help="step in s (1/S)")
    p.add_argument("--max-iter", type=int, default=200, help="shooting corrections cap")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="endpoint mismatch energy tolerance")
    p.add_argument("--damping", type=float, default=0.5, help="correction damping")
    p.add_argument("--resample", type=int, default=None, metavar="N",
                   help="resample both curves to N uniform cells first")
    p.add_argument("--manifold", default=None, metavar="KIND:AMBIENT_DIM",
                   help="manifold override for CSV inputs, e.g. sphere:3")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", "-o", default=None, help="write JSON here instead of stdout")
    p.add_argument("--no-header", action="store_true",
                   help="omit the timestamped header (byte-comparable output)")


def _cmd_dist(args) -> int:
    a, b = _load_pair(args)
    try:
        result = geodesic_bvp(a, b, _config(args))
        report, code = result.report, 0
    except NoConvergence as err:
        report, code = err.report.report, 3
    _emit({"result": report.to_json()}, args)
    return code


def _cmd_geodesic(args) -> int:
    a, b = _load_pair(args)
    code = 0
    try:
        result = geodesic_bvp(a, b, _config(args))
    except NoConvergence as err:
        result, code = err.report, 3
    payload = {
        "result": report_with_path(result)
    }
    _emit(payload, args)
    if args.csv:
        eio.save_path_csv(result.path, args.csv)
    return code


def report_with_path(result) -> dict:
    doc = result.report.to_json()
    doc["path"] = eio.path_to_json(result.path)
    return doc


def _cmd_exp(args) -> int:
    override = _manifold_override(args)
    curve = eio.load_curve(args.curve, override)
    field = eio.load_field(args.field, curve)
    cfg = ShootingConfig(epsilon=args.eps)
    path = exponential_map(curve, field, cfg)
    payload = {
        "result": {
            "path": eio.path_to_json(path),
            "per_slice_energy": slice_energy(path).tolist(),
        }
    }
    _emit(payload, args)
    if args.csv:
        eio.save_path_csv(path, args.csv)
    return 0


def _cmd_shape_dist(args) -> int:
    a, b = _load_pair(args)
    try:
        dist, phi = shape_distance(a, b, _config(args), grid_density=args.grid)
        code = 0
    except NoConvergence as err:
        _emit({"result": err.report.report.to_json()}, args)
        return 3
    _emit({"result": {"distance": dist, "phi": phi.values.tolist(),
                      "grid": args.grid}}, args)
    return code


def _cmd_validate(args) -> int:
    reports = run_validation(
        name_filter=args.filter, flip_r_sign=args.flip_r_sign, workers=_threads()
    )
    lines = [json.dumps(r.to_json()) for r in reports]
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r.passed for r in reports) else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elastica",
        description="Elastic distances and geodesics for curves on manifolds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", help="geodesic distance between two curves")
    p.add_argument("curve_a")
    p.add_argument("curve_b")
    _add_solver_flags(p)
    _add_output_flags(p)
    p.set_defaults(fn=_cmd_dist)

    p = sub.add_parser("geodesic", help="two-point geodesic path")
    p.add_argument("curve_a")
    p.add_argument("curve_b")
    _add_solver_flags(p)
    _add_output_flags(p)
    p.add_argument("--csv", default=None, help="also export the path grid as CSV")
    p.set_defaults(fn=_cmd_geodesic)

    p = sub.add_parser("exp", help="discrete exponential map from a curve and field")
    p.add_argument("curve")
    p.add_argument("field")
    p.add_argument("--eps", type=float, default=1 / 32, help="step in s (1/S)")
    p.add_argument("--manifold", default=None, metavar="KIND:AMBIENT_DIM")
    _add_output_flags(p)
    p.add_argument("--csv", default=None, help="also export the path grid as CSV")
    p.set_defaults(fn=_cmd_exp)

    p = sub.add_parser("shape-dist", help="distance modulo reparameterization")
    p.add_argument("curve_a")
    p.add_argument("curve_b")
    p.add_argument("--grid", type=int, default=100, help="DP lattice density m")
    _add_solver_flags(p)
    _add_output_flags(p)
    p.set_defaults(fn=_cmd_shape_dist)

    p = sub.add_parser("validate", help="run the oracle validation suite")
    p.add_argument("--filter", default=None, help="run only checks whose name contains this")
    p.add_argument("--flip-r-sign", action="store_true",
                   help="debug: inject a sign error into the curvature source")
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(fn=_cmd_validate, no_header=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except eio.ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ElasticaError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
