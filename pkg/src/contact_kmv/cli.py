"""Command-line front end.

Subcommands: construct (print the tensor fields at a point as JSON),
verify (run the identity suites from a config file), extract (print the
nullity triple at given points), deform (verify the homothetically
deformed structure).  Exit status: 0 pass, 1 verification failure,
2 usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .contact import DomainBox
from .families import BuildError, FamilyParams, build_family
from .nullity import extract_kmv
from .report import RunConfig, run_verify
from .scalar_field import ParseError, Point, parse_field


def _parse_point(text: str) -> Point:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z - got {text!r}")
    try:
        return Point(*(float(t) for t in parts))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_structure_args(sub):
    sub.add_argument("--family", "--variant", dest="family", required=True, choices=["I", "II"])
    sub.add_argument("--f", default="0", help="f(z) expression")
    sub.add_argument("--r", default="1", help="r(z) expression, positive on the box")
    sub.add_argument("--s", default="0", help="s(z) expression")
    sub.add_argument("--upsilon", type=float, required=True, help="nonzero constant")
    for axis in ("x", "y", "z"):
        sub.add_argument(
            f"--box-{axis}",
            nargs=2,
            type=float,
            default=[-1.0, 1.0],
            metavar=("LO", "HI"),
        )


def _build_from_args(args):
    params = FamilyParams(
        variant=args.family,
        f=parse_field(args.f),
        r=parse_field(args.r),
        s=parse_field(args.s),
        upsilon=args.upsilon,
        box=DomainBox(tuple(args.box_x), tuple(args.box_y), tuple(args.box_z)),
    )
    return build_family(params)


def _matrix_at(rows, p):
    return [[field.eval(p) for field in row] for row in rows]


def _cmd_construct(args) -> int:
    structure = _build_from_args(args)
    p = args.point
    payload = {
        "point": list(p.as_tuple()),
        "variant": structure.variant,
        "eta": [c.eval(p) for c in structure.eta.components],
        "xi": [c.eval(p) for c in structure.xi.components],
        "phi": _matrix_at(structure.phi, p),
        "g": _matrix_at(structure.g.rows, p),
        "h": _matrix_at(structure.h_field, p),
        "lambda": structure.lam_field.eval(p),
        "kappa": structure.kappa_field.eval(p),
        "mu": structure.mu_field.eval(p),
        "upsilon": structure.upsilon,
    }
    print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


def _cmd_extract(args) -> int:
    structure = _build_from_args(args)
    rows = []
    for p in args.point:
        t = extract_kmv(structure, p)
        rows.append(
            {
                "point": list(p.as_tuple()),
                "kappa": t.kappa,
                "mu": t.mu,
                "upsilon": t.upsilon,
                "residual": t.residual,
            }
        )
    print(json.dumps({"triples": rows}, sort_keys=True, indent=2))
    return 0


def _load_config(args) -> RunConfig | None:
    try:
        return RunConfig.from_json_file(args.config)
    except FileNotFoundError:
        print(f"config not found: {args.config}", file=sys.stderr)
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        print(f"bad config {args.config}: {exc}", file=sys.stderr)
    return None


def _run_and_print(config: RunConfig, subject: str) -> int:
    report = run_verify(config, subject=subject)
    print(report.summary())
    if report.failures:
        print("failing checks: " + ", ".join(report.failures))
    if config.out:
        print(f"report written to {config.out}")
    return 0 if report.passed else 1


def _cmd_verify(args) -> int:
    config = _load_config(args)
    if config is None:
        return 2
    if args.out:
        config.out = args.out
    try:
        return _run_and_print(config, "base")
    except (BuildError, ParseError) as exc:
        print(f"build failed: {exc}", file=sys.stderr)
        return 2


def _cmd_deform(args) -> int:
    config = _load_config(args)
    if config is None:
        return 2
    if args.alpha is not None:
        config.deform_alpha = args.alpha
    if config.deform_alpha is None:
        print("deform needs --alpha or deform_alpha in the config", file=sys.stderr)
        return 2
    if args.out:
        config.out = args.out
    try:
        return _run_and_print(config, "deformed")
    except (BuildError, ParseError) as exc:
        print(f"build failed: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kmv",
        description="Build and verify contact metric structures with "
        "(kappa, mu, upsilon) nullity on a 3-d chart.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_construct = sub.add_parser("construct", help="print the tensor fields at a point")
    _add_structure_args(p_construct)
    p_construct.add_argument("--point", type=_parse_point, required=True, help="x,y,z")
    p_construct.set_defaults(func=_cmd_construct)

    p_verify = sub.add_parser("verify", help="run the identity suites from a config file")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--out", default=None, help="override the report path")
    p_verify.set_defaults(func=_cmd_verify)

    p_extract = sub.add_parser("extract", help="print the nullity triple at points")
    _add_structure_args(p_extract)
    p_extract.add_argument(
        "--point", type=_parse_point, action="append", required=True, help="x,y,z (repeatable)"
    )
    p_extract.set_defaults(func=_cmd_extract)

    p_deform = sub.add_parser("deform", help="verify the deformed structure")
    p_deform.add_argument("--config", required=True)
    p_deform.add_argument("--alpha", type=float, default=None)
    p_deform.add_argument("--out", default=None)
    p_deform.set_defaults(func=_cmd_deform)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BuildError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
