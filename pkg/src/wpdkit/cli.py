"""Command-line interface: wpd, gdd, filtration, compare and verify."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import verify as suite
from .diagram import weighted_pd
from .distances import DistanceResult, bottleneck, d_defo_exact, d_defo_inf_weighted, d_defo_p_weighted
from .errors import CapExceededError, ParseError, ValidationError, WpdkitError
from .examples import example_names, example_pair
from .filtration import DEFAULT_MAX_DIM, EPS_EQ, gdd, weighted_vr
from .homology import zb_function
from .io import diagram_to_json, distance_report, dumps, filtration_to_json, load_space, zb_to_json
from .metric import GH_CELL_CAP, MMSpace, gw_inf_coupling, gw_p_upper, optimal_correspondence, wasserstein_1d
from .stability import stability_report

EXIT_OK, EXIT_VERIFY, EXIT_PARSE, EXIT_VALIDATION, EXIT_CAP = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise ParseError(f"command line: {message}")


def _p_value(text: str) -> float:
    if text.lower() in {"inf", "infinity"}:
        return float("inf")
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"p must be a number or 'inf', got {text!r}") from None
    if p < 1:
        raise argparse.ArgumentTypeError("p must be at least 1")
    return p


def _add_input(sp: argparse.ArgumentParser, second: bool = False) -> None:
    sp.add_argument("--input", help="space file: .json {n,d,mu} or .csv distance matrix")
    if second:
        sp.add_argument("--input2", help="second space file")
    sp.add_argument("--points", action="store_true", help="read .csv inputs as Euclidean point clouds")
    sp.add_argument("--example", choices=example_names(), help="use a built-in example instead of files")
    if not second:
        sp.add_argument("--side", choices=["X", "Y"], default="X", help="which space of the example")
    sp.add_argument("--eps-eq", type=float, default=EPS_EQ, help="grid merging tolerance")
    sp.add_argument("--output", help="write JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wpdkit", description="Weighted persistence diagrams of metric measure spaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("wpd", help="weighted persistence diagram of a space")
    _add_input(sp)
    sp.add_argument("--degree", type=int, default=0)
    sp.add_argument("--max-dim", type=int, default=DEFAULT_MAX_DIM)

    sp = sub.add_parser("gdd", help="global distance distribution of a space")
    _add_input(sp)

    sp = sub.add_parser("filtration", help="Rips filtration with its weights")
    _add_input(sp)
    sp.add_argument("--max-dim", type=int, default=DEFAULT_MAX_DIM)
    sp.add_argument("--zb-degree", type=int, help="also export the birth-death table of this degree")

    sp = sub.add_parser("compare", help="distances and stability checks between two spaces")
    _add_input(sp, second=True)
    sp.add_argument("--degree", type=int, default=0)
    sp.add_argument("--p", type=_p_value, default=float("inf"), help="a number >= 1 or 'inf'")
    sp.add_argument("--max-dim", type=int, default=DEFAULT_MAX_DIM)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--cap", type=int, default=GH_CELL_CAP, help="cap on |X|*|Y| for exact GH and GW_inf")
    sp.add_argument("--suite", choices=["distances", "stability", "all"], default="all",
                    help="which parts of the report to compute")

    sp = sub.add_parser("verify", help="run the acceptance suite or one example reproduction")
    sp.add_argument("--suite", choices=["acceptance", "examples"], default="examples")
    sp.add_argument("--all", action="store_true", help="same as --suite acceptance")
    sp.add_argument("--example", choices=example_names())
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--output", help="also write the results as JSON here")
    return parser


def _one_space(args: argparse.Namespace) -> MMSpace:
    if args.example:
        X, Y = example_pair(args.example)
        return X if args.side == "X" else Y
    if not args.input:
        raise ParseError("command line: --input or --example is required")
    return load_space(args.input, args.points)


def _two_spaces(args: argparse.Namespace) -> tuple[MMSpace, MMSpace]:
    if args.example:
        return example_pair(args.example)
    if not (args.input and args.input2):
        raise ParseError("command line: --input and --input2 (or --example) are required")
    return load_space(args.input, args.points), load_space(args.input2, args.points)


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_wpd(args: argparse.Namespace) -> int:
    X = _one_space(args)
    wF = weighted_vr(X, max(args.max_dim, args.degree + 1), args.eps_eq)
    out = diagram_to_json(weighted_pd(wF, args.degree))
    g = gdd(X, args.eps_eq)
    out["gdd"] = {"support": g.support.tolist(), "masses": g.masses.tolist()}
    _emit(dumps(out), args.output)
    return EXIT_OK


def cmd_gdd(args: argparse.Namespace) -> int:
    g = gdd(_one_space(args), args.eps_eq)
    _emit(dumps({"support": g.support.tolist(), "masses": g.masses.tolist()}), args.output)
    return EXIT_OK


def cmd_filtration(args: argparse.Namespace) -> int:
    X = _one_space(args)
    max_dim = args.max_dim if args.zb_degree is None else max(args.max_dim, args.zb_degree + 1)
    wF = weighted_vr(X, max_dim, args.eps_eq)
    out = filtration_to_json(wF.filtration, wF.weights)
    if args.zb_degree is not None:
        out["zb"] = zb_to_json(zb_function(wF.filtration, args.zb_degree))
    _emit(dumps(out), args.output)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    X, Y = _two_spaces(args)
    p, d = args.p, args.degree
    p_label = "inf" if np.isinf(p) else p
    max_dim = max(args.max_dim, d + 1)
    a = weighted_pd(weighted_vr(X, max_dim, args.eps_eq), d)
    b = weighted_pd(weighted_vr(Y, max_dim, args.eps_eq), d)

    out: dict = {"degree": d, "p": p_label}
    if args.suite in ("distances", "all"):
        out.update(_distances(args, X, Y, a, b))
    if args.suite in ("stability", "all"):
        rep = stability_report(X, Y, d, p, max_dim=max_dim, eps_eq=args.eps_eq, gromov_cap=args.cap, seed=args.seed)
        out["stability"] = [
            {"name": c.name, "lhs": c.lhs.value, "lhs_mode": c.lhs.mode, "rhs": c.rhs.value, "rhs_mode": c.rhs.mode,
             "status": c.status}
            for c in rep.checks
        ]
    _emit(dumps(out), args.output)
    return EXIT_OK


def _distances(args: argparse.Namespace, X: MMSpace, Y: MMSpace, a, b) -> dict:
    p = args.p
    p_label = "inf" if np.isinf(p) else p
    dis, rel = optimal_correspondence(X.space, Y.space, args.cap)
    gh = DistanceResult(dis / 2.0, rel, "exact")
    if np.isinf(p):
        val, plan = gw_inf_coupling(X, Y, args.cap)
        gw = DistanceResult(val, plan, "exact")
    else:
        val, plan = gw_p_upper(X, Y, p, seed=args.seed)
        gw = DistanceResult(val, plan, "upper_bound")
    w_gdd = DistanceResult(wasserstein_1d(gdd(X, args.eps_eq), gdd(Y, args.eps_eq), p), None, "exact")
    bn = DistanceResult(bottleneck(a.diagram, b.diagram), None, "exact")
    defo = d_defo_exact(a.diagram, b.diagram)
    wdefo = d_defo_inf_weighted(a, b) if np.isinf(p) else d_defo_p_weighted(a, b, p, seed=args.seed)

    distances = [
        distance_report("gh", None, gh),
        distance_report("gw", p_label, gw),
        distance_report("wasserstein_gdd", p_label, w_gdd),
        distance_report("bottleneck", None, bn),
        distance_report("d_defo", None, defo),
        distance_report("d_wdefo", p_label, wdefo),
    ]
    gw_relation = "2*GW_inf" if np.isinf(p) else "2*GW_p"
    edits = [
        {"metric": "edit_cmet", "relation": "2*GH", "base_metric": "gh", "factor": 2, "p": None,
         "value": 2 * gh.value, "mode": gh.mode},
        {"metric": "edit_mmet", "relation": gw_relation, "base_metric": "gw", "factor": 2, "p": p_label,
         "value": 2 * gw.value, "mode": gw.mode},
    ]
    return {"distances": distances, "edit_distances": edits}


def cmd_verify(args: argparse.Namespace) -> int:
    if args.example:
        checks = {args.example: suite.EXAMPLE_CHECKS[args.example]}
    elif args.suite == "examples" and not args.all:
        checks = {k: suite.SUITE[k] for k in
                  ("ums-reproduction", "boutin-kemper-reproduction", "hexagon-reproduction", "finite-p-insensitivity")}
    else:
        checks = dict(suite.SUITE)
    seeded = {"mobius-vs-reduction", "bottleneck-sandwich", "stability", "round-trips"}
    results = []
    for name, fn in checks.items():
        res = fn(seed=args.seed) if name in seeded else fn()
        results.append(res)
        print(res.line(), flush=True)
    if args.output:
        Path(args.output).write_text(
            dumps([{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results])
        )
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


COMMANDS = {"wpd": cmd_wpd, "gdd": cmd_gdd, "filtration": cmd_filtration, "compare": cmd_compare, "verify": cmd_verify}


def _error(exc: WpdkitError, code: int) -> int:
    payload = {"error": exc.kind, "message": str(exc)}
    if isinstance(exc, ParseError) and exc.line is not None:
        payload["line"] = exc.line
    if isinstance(exc, CapExceededError):
        payload.update({"cap_name": exc.cap_name, "cap": exc.cap, "size": exc.size})
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ParseError as exc:
        return _error(exc, EXIT_PARSE)
    except CapExceededError as exc:
        return _error(exc, EXIT_CAP)
    except ValidationError as exc:
        return _error(exc, EXIT_VALIDATION)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
