"""Command-line entry point: ``mclear clear | verify | gen-scenarios``.

Exit codes: 0 success, 1 usage or input error, 2 solver failure
(infeasible, unbounded, iteration limit), 3 a theorem check failed.

Any flag may also come from a JSON object passed with ``--config``
(keys are flag names without the leading dashes); flags given on the
command line win.  ``MCLEAR_THREADS`` caps parallel scenario solves.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable

from . import clearing
from .io import (BUILTINS, ParseError, SpecError, dump_scenarios, generate_scenarios,
                 load_case, parse_scenarios, parse_spec, scale_generator_increments,
                 write_comparison, write_report)
from .io.report import build_tables, comparison_extra, render_markdown
from .lp import LpError
from .metrics import compute_metrics, verify_theorems
from .model import InvalidCase, MarketCase, ensure_valid

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3
MODES = ("det", "sto", "ws", "compare")

# Called on the stochastic outcome inside ``verify`` before checking.  Tests
# use it to inject a corrupted outcome.
outcome_hook: Callable | None = None


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with default flag values")
    p.add_argument("--case", help="case file path or builtin:<name>")
    p.add_argument("--scenarios", help="scenario set file replacing the case's scenarios")
    p.add_argument("--spec", help="scenario spec; scenarios are generated from it")
    p.add_argument("--seed", type=int, help="seed override for --spec")
    p.add_argument("--count", type=int, help="scenario count override for --spec")
    p.add_argument("--out", help="output directory (reports) or file (gen-scenarios)")
    p.add_argument("--format", choices=("csv", "md", "json"), help="report format (default md)")
    p.add_argument("--tol", type=float, help="theorem check tolerance (default 1e-6)")
    p.add_argument("--bid-scale", metavar="UP,DN",
                   help="multiply generator incremental bids, e.g. 0.5,1.5")


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="mclear", description="Two-settlement market clearing under uncertainty.")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)
    c = sub.add_parser("clear", help="clear a case and report prices and settlements")
    _common(c)
    c.add_argument("--mode", choices=MODES)
    c.add_argument("--stat", choices=clearing.STATISTICS,
                   help="capacity summary for the deterministic model")
    v = sub.add_parser("verify", help="clear stochastically and check the pricing theorems")
    _common(v)
    g = sub.add_parser("gen-scenarios", help="draw a scenario set from a spec")
    _common(g)
    return top


_DEFAULTS = {"mode": None, "stat": "mean", "format": "md", "tol": 1e-6}


def _merge_config(ns: argparse.Namespace) -> argparse.Namespace:
    if ns.config:
        try:
            conf = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(conf, dict):
            raise UsageError("config must be a JSON object")
        for key, val in conf.items():
            attr = key.replace("-", "_")
            if attr in ("command", "config") or not hasattr(ns, attr):
                raise UsageError(f"unknown config key {key!r}")
            if getattr(ns, attr) is None:
                setattr(ns, attr, val)
    for k, v in _DEFAULTS.items():
        if hasattr(ns, k) and getattr(ns, k) is None:
            setattr(ns, k, v)
    return ns


def _validate(ns: argparse.Namespace):
    if ns.command in ("clear", "verify") and not ns.case:
        raise UsageError(f"{ns.command}: --case is required")
    if ns.command == "clear" and not ns.mode:
        raise UsageError("clear: --mode is required (det, sto, ws or compare)")
    if ns.command == "clear" and ns.mode not in MODES:
        raise UsageError(f"clear: unknown mode {ns.mode!r}")
    if ns.command == "gen-scenarios" and not (ns.spec and ns.case):
        raise UsageError("gen-scenarios: --spec and --case are required")
    if ns.scenarios and ns.spec:
        raise UsageError("--scenarios and --spec are mutually exclusive")
    if ns.tol is not None and not ns.tol > 0:
        raise UsageError("--tol must be positive")
    if ns.format not in ("csv", "md", "json"):
        raise UsageError(f"unknown format {ns.format!r}")


def _bid_scale(text) -> tuple[float, float]:
    try:
        up, dn = (float(x) for x in str(text).split(","))
    except ValueError:
        raise UsageError("--bid-scale expects UP,DN") from None
    if not (up > 0 and dn > 0):
        raise UsageError("--bid-scale factors must be positive")
    return up, dn


def resolve_case(ns: argparse.Namespace) -> MarketCase:
    ref = ns.case
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        if name not in BUILTINS:
            raise UsageError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}")
        case = BUILTINS[name]()
    else:
        case = load_case(ref)
    if ns.spec:
        spec = parse_spec(Path(ns.spec).read_text())
        if ns.count is not None:
            spec = replace(spec, count=ns.count)
        case = ensure_valid(case.with_scenarios(generate_scenarios(spec, case, ns.seed)))
    elif ns.scenarios:
        sc = parse_scenarios(Path(ns.scenarios).read_text())
        case = ensure_valid(case.with_scenarios(sc))
    if ns.bid_scale:
        case = scale_generator_increments(case, *_bid_scale(ns.bid_scale))
    return case


def _summary_text(runs, theorems=None, extra=None) -> str:
    tables = [t for t in build_tables(runs, theorems) if t.name in ("summary", "theorems")]
    return render_markdown(tables, extra)


def cmd_clear(ns) -> int:
    case = resolve_case(ns)
    if ns.mode == "compare":
        runs = []
        for mode in ("det", "sto", "ws"):
            out = clearing.clear(case, mode, ns.stat)
            runs.append((out, compute_metrics(out)))
        extra = comparison_extra(runs)
        print(_summary_text(runs, extra=extra))
        if ns.out:
            write_comparison(runs, ns.format, ns.out)
        return EXIT_OK
    out = clearing.clear(case, ns.mode, ns.stat)
    met = compute_metrics(out)
    theorems = verify_theorems(case, out, ns.tol) if ns.mode == "sto" else None
    print(_summary_text([(out, met)], theorems))
    if ns.out:
        write_report(out, met, theorems, ns.format, ns.out)
    return EXIT_OK


def cmd_verify(ns) -> int:
    case = resolve_case(ns)
    out = clearing.clear_stochastic(case)
    if outcome_hook is not None:
        out = outcome_hook(out) or out
    met = compute_metrics(out)
    report = verify_theorems(case, out, ns.tol)
    for line in report.lines():
        print(line)
    for c in report.checks.values():
        for note in c.notes:
            print(f"  {c.name}: {note}")
    if ns.out:
        write_report(out, met, report, ns.format, ns.out)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_gen_scenarios(ns) -> int:
    case = resolve_case(ns)
    text = dump_scenarios(case.scenarios)
    if ns.out:
        Path(ns.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"clear": cmd_clear, "verify": cmd_verify, "gen-scenarios": cmd_gen_scenarios}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if not ns.command:
            raise UsageError(parser.format_usage().strip())
        ns = _merge_config(ns)
        _validate(ns)
        return COMMANDS[ns.command](ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, SpecError, InvalidCase, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LpError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
