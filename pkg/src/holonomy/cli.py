"""Command line interface.

Every command prints a JSON report ``{command, inputs, results,
diagnostics, version, timestamp}``.  Exit codes: 0 success (including
"nothing found"), 1 other analysis errors, 2 bad arguments or unreadable
config, 3 invalid pseudogroup data, 4 exhausted search budget.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from . import examples as ex
from .config import ParseError, dumps_config, load_config
from .expansion import (DEFAULT_DEPTH, BudgetExhausted, Divergent, estimate_constants, expansion_profile,
                        gauge_inequality_check, tempered_gauge, write_profile_csv)
from .hyperbolic import (DEFAULT_BUDGET, certify_contraction, extract_expanding_word,
                         find_hyperbolic_fixed_point, pliss_truncate)
from .maps import InvalidMap
from .pliss import find_regular_index, irregularity_flags, max_regular_index, regularity_flags
from .pseudogroup import ValidationError
from .resilience import DEFAULT_DENSITY, detect_ping_pong, entropy_estimate, ping_pong_to_resilient

DEFAULT_A = 0.3

REPORT_SCHEMA = {
    "type": "object",
    "required": ["command", "inputs", "results", "diagnostics", "version", "timestamp"],
    "additionalProperties": False,
    "properties": {
        "command": {"type": ["string", "null"]},
        "inputs": {"type": "object"},
        "results": {"type": ["object", "null"]},
        "diagnostics": {"type": "object"},
        "version": {"type": "string"},
        "timestamp": {"type": "string"},
    },
}

ERROR_SCHEMA = {
    "type": "object",
    "required": ["error_kind", "detail"],
    "properties": {"error_kind": {"type": "string"}, "detail": {"type": "string"}},
}

EXIT_OK, EXIT_ERROR, EXIT_PARSE, EXIT_VALIDATION, EXIT_BUDGET = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def _source(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--example", choices=ex.names(), help="built-in pseudogroup")
    g.add_argument("--config", help="TOML pseudogroup file")


def _analysis(p, depth=True):
    p.add_argument("--a", type=float, default=DEFAULT_A, help="expansion threshold (default 0.3)")
    p.add_argument("--eps1", type=float, default=None, help="epsilon1, must satisfy 0 < eps1 < a/100 (default a/200)")
    if depth:
        p.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="word depth N (default 12)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holonomy", description="Transverse dynamics of 1-D pseudogroups.")
    parser.add_argument("--out", help="write the JSON report here instead of stdout")
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized checks (default 0)")
    parser.add_argument("--workers", type=int, default=1, help="worker count; results do not depend on it")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("describe", help="summarize a pseudogroup and its uniform constants")
    _source(p)
    _analysis(p, depth=False)

    p = sub.add_parser("exponent", help="maximal n-expansion profile and exponent estimate")
    _source(p)
    _analysis(p)
    p.add_argument("--point", type=float, action="append", required=True)
    p.add_argument("--csv", help="write the (n, mu_n, lambda_n/n) profile here")

    p = sub.add_parser("pliss", help="regular index of a log-derivative sequence")
    p.add_argument("--csv", required=True, help="CSV file holding the sequence")
    p.add_argument("--column", default="0", help="column name or 0-based index (default 0)")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--eps1", type=float, required=True)
    p.add_argument("--flags-csv", help="write per-index regularity flags here")

    p = sub.add_parser("contract", help="certified contraction from an expanding word")
    _source(p)
    _analysis(p, depth=False)
    p.add_argument("--point", type=float, required=True)
    p.add_argument("--n", type=int, required=True, help="minimal expanding word length")

    for name, text in (("fixed-point", "hyperbolic fixed point near a point"),):
        p = sub.add_parser(name, help=text)
        _source(p)
        _analysis(p, depth=False)
        p.add_argument("--point", type=float, required=True)
        p.add_argument("--mu", type=float, default=0.5)
        p.add_argument("--delta1", type=float, default=None)
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)

    for name, text in (("ping-pong", "search a seed grid for a ping-pong game"),
                       ("resilient", "ping-pong game and the resulting resilient point")):
        p = sub.add_parser(name, help=text)
        _source(p)
        _analysis(p, depth=False)
        p.add_argument("--density", type=int, default=DEFAULT_DENSITY, help="seeds per core component")
        p.add_argument("--mu", type=float, default=0.5)
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="composed letters per seed")

    p = sub.add_parser("gauge", help="tempered gauge and its inequality")
    _source(p)
    p.add_argument("--point", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--generator", help="also check the gauge inequality along this generator")

    p = sub.add_parser("entropy", help="separated-set entropy estimate")
    _source(p)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--component", type=int, default=0)

    p = sub.add_parser("examples", help="list or dump built-in examples")
    esub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    esub.add_parser("list")
    d = esub.add_parser("dump")
    d.add_argument("name", choices=ex.names())
    return parser


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, tuples become lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _pseudogroup(args):
    return ex.build(args.example) if args.example else load_config(args.config)


def _eps1(args) -> float:
    a = args.a
    eps1 = a / 200 if args.eps1 is None else args.eps1
    if not a > 0:
        raise ParseError("--a must be positive", field="a")
    if not 0 < eps1 < a / 100:
        raise ParseError(f"need 0 < eps1 < a/100 = {a / 100}", field="eps1")
    return eps1


def _constants(args, pg):
    a = args.a
    eps1 = min(_eps1(args), pg.transversal.epsilon0)
    return estimate_constants(pg, eps1, a=a, seed=args.seed)


def _source_inputs(args) -> dict:
    return {"example": args.example} if getattr(args, "example", None) else {"config": args.config}


def _read_column(path, column):
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise ParseError("empty CSV", field="csv")
    header = None
    try:
        float(rows[0][0] if column.isdigit() else "x")
    except ValueError:
        header, rows = rows[0], rows[1:]
    if column.isdigit():
        idx = int(column)
    elif header is not None and column in header:
        idx = header.index(column)
    else:
        raise ParseError(f"unknown column {column!r}", field="column")
    values = []
    for line, r in enumerate(rows, start=2 if header else 1):
        try:
            values.append(float(r[idx]))
        except (ValueError, IndexError):
            raise ParseError("not a number", line=line, field=str(column)) from None
    return values


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_describe(args):
    pg = _pseudogroup(args)
    c = _constants(args, pg)
    gens = []
    for g in pg.generators:
        lo, hi = g.deriv_bounds()
        gens.append({"id": g.id, "kind": g.expr.kind, "domain": g.domain.to_list(),
                     "extended_domain": g.extended_domain.to_list(), "source": g.source_component,
                     "target": g.target_component, "inverse": g.inverse_id, "identity": g.is_identity,
                     "deriv_bounds": [lo, hi]})
    comps = [{"core": c0.to_list(), "extended": e.to_list()} for c0, e in pg.transversal.components]
    return {"components": comps, "epsilon0": pg.transversal.epsilon0, "generators": gens,
            "constants": c.to_dict()}, {}


def cmd_exponent(args):
    _eps1(args)
    pg = _pseudogroup(args)
    if args.depth < 1:
        raise ParseError("--depth must be at least 1", field="depth")
    recs = [expansion_profile(pg, x, args.depth) for x in args.point]
    if args.csv:
        write_profile_csv(recs, args.csv)
    results = []
    for r in recs:
        results.append({
            "point": r.point, "depth": r.depth, "lambda_hat": r.lambda_hat,
            "finite_depth_evidence_above_a": r.in_E_plus(args.a),
            "profile": [{"n": n, "mu_n": mu, "lambda_n_over_n": ratio} for n, mu, ratio in r.profile],
            "witness": list(r.per_n[-1][2].letters),
        })
    diag = {"note": "lambda_hat is max_{n<=N} ln(mu_n)/n, a finite-depth lower estimate"}
    return {"points": results}, diag


def cmd_pliss(args):
    lam = _read_column(args.csv, args.column)
    res = find_regular_index(lam, args.a, args.eps1)
    if args.flags_csv:
        reg = regularity_flags(lam, args.eps1)
        irr = irregularity_flags(lam, args.eps1)
        with open(args.flags_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "lambda", "regular", "irregular"])
            for i, (v, r, q) in enumerate(zip(lam, reg, irr), start=1):
                w.writerow([i, repr(v), int(r), int(q)])
    return ({"q": res.q, "partial_sum": res.partial_sum, "checked": res.checked, "m": len(lam)},
            {"max_regular_index": max_regular_index(lam, args.eps1)})


def cmd_contract(args):
    pg = _pseudogroup(args)
    c = _constants(args, pg)
    w = extract_expanding_word(pg, args.point, args.n, c)
    q, trunc = pliss_truncate(pg, w, c)
    cert = certify_contraction(pg, trunc, args.point, c, chain_length=len(w))
    return ({"expanding_word": list(w.letters), "q": q, "certificate": cert.to_dict()},
            {"constants": c.to_dict()})


def cmd_fixed_point(args):
    pg = _pseudogroup(args)
    c = _constants(args, pg)
    res = find_hyperbolic_fixed_point(pg, args.point, c, mu=args.mu, delta1=args.delta1, budget=args.budget)
    return res.to_dict(), {"constants": c.to_dict()}


def cmd_ping_pong(args):
    pg = _pseudogroup(args)
    c = _constants(args, pg)
    cert = detect_ping_pong(pg, c, budget=args.budget, density=args.density, mu=args.mu)
    out = {"certificate": None if cert is None else cert.to_dict(), "found": cert is not None}
    if args.command == "resilient":
        out["resilient"] = None if cert is None else ping_pong_to_resilient(cert).to_dict()
    return out, {"constants": c.to_dict(), "seeds_per_component": args.density}


def cmd_gauge(args):
    pg = _pseudogroup(args)
    rec = tempered_gauge(pg, args.point, args.epsilon, args.depth)
    out = {"point": rec.point, "epsilon": rec.epsilon, "value": rec.value,
           "truncation_depth": rec.truncation_depth, "tail_bound": rec.tail_bound}
    if args.generator:
        chk = gauge_inequality_check(pg, args.point, args.generator, args.epsilon, args.depth)
        out["inequality"] = {"passed": chk.passed, "lower": chk.lower, "middle": chk.middle, "upper": chk.upper}
    return out, {}


def cmd_entropy(args):
    pg = _pseudogroup(args)
    est = entropy_estimate(pg, args.n, args.eps, args.component)
    return ({"estimate": est.value, "separated_points": est.count, "identity_separated_points": est.base_count,
             "n": est.n, "eps": est.eps},
            {"note": "ln(s(n,eps)/s(0,eps))/n with greedy separated sets"})


def cmd_examples(args):
    if args.action == "list":
        return {"examples": [{"name": s.name, "description": s.description} for s in ex.EXAMPLES.values()]}, {}
    return {"name": args.name, "config": dumps_config(ex.build(args.name))}, {}


COMMANDS = {
    "describe": cmd_describe, "exponent": cmd_exponent, "pliss": cmd_pliss, "contract": cmd_contract,
    "fixed-point": cmd_fixed_point, "ping-pong": cmd_ping_pong, "resilient": cmd_ping_pong,
    "gauge": cmd_gauge, "entropy": cmd_entropy, "examples": cmd_examples,
}


def _inputs(args) -> dict:
    skip = {"out", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def run(argv=None) -> tuple[int, dict]:
    """Parse ``argv``, execute, and return ``(exit_code, report)``."""
    report = {"command": None, "inputs": {}, "results": None, "diagnostics": {}, "version": __version__,
              "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    try:
        args = build_parser().parse_args(argv)
        report["command"] = args.command
        report["inputs"] = _inputs(args)
        results, diag = COMMANDS[args.command](args)
        report["results"], report["diagnostics"] = results, diag
        code = EXIT_OK
    except ParseError as exc:
        report["results"] = {"error_kind": "ParseError", "detail": str(exc)}
        code = EXIT_PARSE
    except (ValidationError, InvalidMap) as exc:
        report["results"] = {"error_kind": "ValidationError", "detail": str(exc),
                             "invariant": getattr(exc, "invariant", None)}
        code = EXIT_VALIDATION
    except BudgetExhausted as exc:
        report["results"] = {"error_kind": "BudgetExhausted", "detail": str(exc)}
        code = EXIT_BUDGET
    except (ValueError, ArithmeticError, RuntimeError, KeyError) as exc:
        report["results"] = {"error_kind": type(exc).__name__, "detail": str(exc)}
        code = EXIT_ERROR
    return code, _clean(report)


def render(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    code, report = run(argv)
    text = render(report)
    out = None
    if "--out" in argv:
        i = argv.index("--out")
        out = argv[i + 1] if i + 1 < len(argv) else None
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
