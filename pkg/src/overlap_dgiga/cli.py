"""Command line interface: ``overlap-dgiga run | sweep | check | validate``."""

from __future__ import annotations

import argparse
import logging
import math
import sys

from .cases import EXAMPLES
from .errors import ConfigError, GeometryError, SolverError
from .harness import RunConfig, emit_outputs, format_table, lam_tag, run_convergence

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_GEOMETRY, EXIT_SOLVER = 0, 1, 2, 3, 4


def _lam(text):
    if text.lower() in ("inf", "none", "matching"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("invalid lambda %r" % text) from None


def _lam_list(text):
    return [_lam(t) for t in text.split(",") if t.strip()]


def _common(p):
    p.add_argument("--example", choices=sorted(EXAMPLES), default="smooth")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--elements", type=int, default=4,
                   help="spans per patch and direction on the coarsest level")
    p.add_argument("--eta", type=float, default=None, help="penalty (default 4(p+1)^2)")
    p.add_argument("--quad", type=int, default=None, help="Gauss points per direction")
    p.add_argument("--variant", choices=("symmetric", "one-sided"), default="symmetric")
    p.add_argument("--non-matching", action="store_true",
                   help="refine one patch once more than the others")
    p.add_argument("--overlap-scale", type=float, default=1.0,
                   help="factor c in d_o = c h^lambda")
    p.add_argument("--solver", choices=("auto", "cg", "direct"), default="auto")
    p.add_argument("--out", default=None, help="output directory for CSV and SVG")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="overlap-dgiga",
        description="DG-IGA diffusion solver on multipatch domains with overlapping patches.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every level")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="convergence study for one overlap exponent")
    _common(run)
    run.add_argument("--lambda", dest="lam", type=_lam, required=True,
                     help="overlap exponent, d_o = h^lambda ('inf' for matching)")

    sweep = sub.add_parser("sweep", help="convergence studies for several exponents")
    _common(sweep)
    sweep.add_argument("--lambdas", type=_lam_list, default=_lam_list("1,2,2.5,3"))

    sub.add_parser("check", help="run the invariant self-test suite")

    val = sub.add_parser("validate", help="schema-check a JSON geometry file")
    val.add_argument("path")
    return parser


def _config(args, lam):
    return RunConfig(example=args.example, degree=args.degree, lam=lam, levels=args.levels,
                     eta=args.eta, quad=args.quad, out=args.out,
                     variant=args.variant.replace("-", "_"), non_matching=args.non_matching,
                     elements=args.elements, overlap_scale=args.overlap_scale, solver=args.solver)


def _studies(args, lams):
    tables = []
    for lam in lams:
        table = run_convergence(_config(args, lam))
        print("example=%s lambda=%s" % (args.example, lam_tag(lam)))
        print(format_table(table))
        print("mean of last two rates: %.3f\n" % table.mean_last_rates())
        tables.append(table)
    if args.out:
        for path in emit_outputs(tables, args.out, stem=args.example):
            print("wrote %s" % path)
    return EXIT_OK


def _check():
    from .selfcheck import run_checks

    results = run_checks()
    for r in results:
        print(r.line())
    failed = sum(not r.ok for r in results)
    print("%d checks, %d failed" % (len(results), failed))
    return EXIT_FAIL if failed else EXIT_OK


def _validate(path):
    from .geometry_io import GeometryFileError, load

    try:
        mp = load(path)
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except GeometryFileError as exc:
        print("%s: %s" % (path, exc), file=sys.stderr)
        return EXIT_CONFIG
    print("%s: ok (%d patches, %d interfaces, %d dofs)"
          % (path, len(mp.patches), len(mp.interfaces), mp.num_dofs))
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _studies(args, [args.lam])
        if args.command == "sweep":
            return _studies(args, args.lambdas)
        if args.command == "check":
            return _check()
        return _validate(args.path)
    except ConfigError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print("geometry error: %s" % exc, file=sys.stderr)
        return EXIT_GEOMETRY
    except SolverError as exc:
        print("solver error: %s" % exc, file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print("I/O error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
