"""Command-line interface: ``auxsem identify|verify|constraints|estimate|compare|simulate``.

Exit status: 0 success or full identification, 2 partial identification
(or violated constraints), 1 error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .augment import KnownEdges, load_known
from .constraints import derive_constraints, evaluate_constraints
from .graph import GraphError, load_graph
from .identify import (SubsumptionViolation, aux_is_fixpoint, compare_methods, ghtc_fixpoint,
                       simple_is_fixpoint)
from .oracle import (CovarianceError, SingularSystem, dump_instance, estimate, implied_covariance,
                     load_cov, random_instance, verify_identification)

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _load(args):
    path = args.graph_opt or args.graph
    if not path:
        raise GraphError("no graph file given")
    g = load_graph(path)
    known = load_known(args.known, g) if args.known else KnownEdges()
    return g, known


def _identify_result(args, g, known):
    method = getattr(args, "method", "aux")
    if method == "ghtc":
        return ghtc_fixpoint(g)
    if method == "simple":
        return simple_is_fixpoint(g)
    return aux_is_fixpoint(g, known, quasi=args.quasi)


def _load_sigma(args, g):
    sigma = load_cov(args.cov)
    sigma.check(args.psd_tol)
    return sigma.reorder(g.nodes)


def cmd_identify(args) -> int:
    g, known = _load(args)
    result = _identify_result(args, g, known)
    payload = result.to_json()
    text = str(result)
    if args.compare:
        comparison = compare_methods(g)
        payload = {"result": payload, "comparison": comparison.to_json()}
        text += "\n\n" + str(comparison)
    _emit(args, payload, text)
    return EXIT_OK if result.complete else EXIT_PARTIAL


def cmd_verify(args) -> int:
    g, known = _load(args)
    result = _identify_result(args, g, known)
    report = verify_identification(g, result, args.trials, args.tol, args.seed)
    _emit(args, report.to_json(), str(report))
    if report.vacuous:
        print("warning: nothing identified, verification is vacuous", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_PARTIAL


def cmd_constraints(args) -> int:
    g, known = _load(args)
    result = aux_is_fixpoint(g, known, quasi=args.quasi)
    constraints = derive_constraints(g, known, result, use_identified=not args.external_only)
    payload = {"constraints": [c.to_json() for c in constraints]}
    lines = [str(c) for c in constraints] or ["no constraints"]
    status = EXIT_OK
    if args.cov:
        sigma = _load_sigma(args, g)
        values = known.numeric()
        for est in estimate(sigma, result, values):
            values.setdefault(est.edge, est.value)
        residuals = evaluate_constraints(sigma, constraints, values)
        ok = [r <= args.tol for r in residuals]
        payload["residuals"] = [{"formula": c.formula, "residual": r, "pass": p}
                                for c, r, p in zip(constraints, residuals, ok)]
        lines = [f"{'pass' if p else 'FAIL'}  {r:.3e}  {c}"
                 for c, r, p in zip(constraints, residuals, ok)] or ["no constraints"]
        if not all(ok):
            status = EXIT_PARTIAL
    _emit(args, payload, "\n".join(lines))
    return status


def cmd_estimate(args) -> int:
    g, known = _load(args)
    if not args.cov:
        raise CovarianceError("estimate needs --cov")
    sigma = _load_sigma(args, g)
    result = aux_is_fixpoint(g, known, quasi=args.quasi)
    estimates = estimate(sigma, result, known.numeric())
    payload = {
        "estimates": [{"edge": e.edge.key, "label": e.edge.label, "value": e.value,
                       "condition": e.condition, "certificate": e.certificate.to_json()}
                      for e in estimates],
        "unidentified": sorted(e.key for e in result.unidentified),
    }
    lines = [f"{e.edge.label:<8} {e.edge.key:<16} {e.value: .6f}  cond {e.condition:.3g}  {e.certificate}"
             for e in estimates]
    if result.unidentified:
        lines.append("unidentified: " + ", ".join(sorted(e.key for e in result.unidentified)))
    _emit(args, payload, "\n".join(lines) or "nothing identified")
    return EXIT_OK if result.complete else EXIT_PARTIAL


def cmd_compare(args) -> int:
    g, _ = _load(args)
    comparison = compare_methods(g)
    _emit(args, comparison.to_json(), str(comparison))
    return EXIT_OK


def cmd_simulate(args) -> int:
    g, known = _load(args)
    fixed = {e: kv.value for e, kv in known.items()}
    inst = random_instance(g, args.seed, fixed=fixed)
    csv_text = implied_covariance(inst).to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    if args.instance_out:
        with open(args.instance_out, "w", encoding="utf-8") as fh:
            fh.write(dump_instance(inst) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("graph", nargs="?", help="graph file")
    common.add_argument("--graph", dest="graph_opt", metavar="PATH", help="graph file")
    common.add_argument("--known", metavar="PATH", help="known coefficients (tail -> head = value)")
    common.add_argument("--cov", metavar="PATH", help="covariance CSV with a header row of node names")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--trials", type=int, default=100)
    common.add_argument("--tol", type=float, default=1e-6)
    common.add_argument("--psd-tol", type=float, default=1e-8,
                        help="tolerance for the symmetry / PSD check on --cov")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--quasi", action="store_true",
                        help="also subtract externally known edges into the head")

    parser = argparse.ArgumentParser(prog="auxsem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"auxsem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identify", parents=[common], help="run an identification fixpoint")
    p.add_argument("--method", choices=("aux", "ghtc", "simple"), default="aux")
    p.add_argument("--compare", action="store_true", help="also compare all methods")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("verify", parents=[common], help="check certificates on random instances")
    p.add_argument("--method", choices=("aux", "ghtc", "simple"), default="aux")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("constraints", parents=[common], help="derive testable implications")
    p.add_argument("--external-only", action="store_true",
                   help="build proxies from external knowledge only")
    p.set_defaults(func=cmd_constraints)

    p = sub.add_parser("estimate", parents=[common], help="estimate coefficients from --cov")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("compare", parents=[common], help="per-edge verdicts of all methods")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", parents=[common], help="write the covariance of a random instance")
    p.add_argument("--out", metavar="PATH", help="covariance CSV (default: stdout)")
    p.add_argument("--instance-out", metavar="PATH", help="instance JSON")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.trials < 1:
        parser.error("--trials must be at least 1")
    try:
        return args.func(args)
    except (GraphError, CovarianceError, SingularSystem, SubsumptionViolation,
            ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
