"""Report tables in CSV, markdown or JSON.

A report is four tables with a fixed column order:

``prices``    node, day-ahead price, expected real-time price, distortion
``players``   kind, id, node, day-ahead quantity, expected cost, expected
              payment, uplift
``summary``   one row per clearing mode (surplus, distortion, uplift,
              operator revenue, objective)
``theorems``  check, passed, margin, applicable (only when checks were run)

CSV follows RFC 4180 (the ``csv`` module's default dialect with CRLF line
ends) and writes one file per table.  Markdown and JSON write a single
file.  JSON floats carry 17 significant digits; non-finite values become
``null``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

FORMATS = ("csv", "md", "json")

PRICE_COLS = ("node", "pi", "expected_Pi", "distortion")
PLAYER_COLS = ("kind", "id", "node", "quantity", "expected_cost", "expected_payment", "uplift")
SUMMARY_COLS = ("mode", "phi", "phi_g", "phi_d", "phi_sto", "M_avg", "M_max", "total_uplift",
                "iso_revenue", "objective")
THEOREM_COLS = ("check", "passed", "margin", "applicable")


class ReportError(OSError):
    pass


@dataclass
class Table:
    name: str
    columns: tuple
    rows: list

    def as_dicts(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]


def _f(v) -> float:
    return float(v)


def price_table(outcome, metrics) -> Table:
    p = outcome.probabilities
    pi = outcome.day_ahead.pi
    if pi.ndim == 2:
        pi = p @ pi
    ePi = p @ outcome.real_time.Pi
    rows = [(n.id, _f(a), _f(b), _f(m))
            for n, a, b, m in zip(outcome.case.nodes, pi, ePi, metrics.distortion)]
    return Table("prices", PRICE_COLS, rows)


def player_table(outcome, metrics) -> Table:
    case, cf = outcome.case, metrics.cashflows
    g, d = outcome.day_ahead.g, outcome.day_ahead.d
    if g.ndim == 2:
        g, d = outcome.probabilities @ g, outcome.probabilities @ d
    rows = [("gen", x.id, x.node, _f(q), _f(c), _f(pay), _f(u))
            for x, q, c, pay, u in zip(case.generators, g, cf.EC_g, cf.EP_g, cf.uplift_g)]
    rows += [("dem", x.id, x.node, _f(q), _f(c), _f(pay), _f(u))
             for x, q, c, pay, u in zip(case.demands, d, cf.EC_d, cf.EP_d, cf.uplift_d)]
    return Table("players", PLAYER_COLS, rows)


def summary_row(outcome, metrics) -> tuple:
    m = metrics
    return (outcome.mode, m.phi, m.phi_g, m.phi_d, m.phi_sto, m.M_avg, m.M_max,
            m.total_uplift, m.iso_revenue, float(outcome.objective))


def theorem_table(report) -> Table:
    rows = [(c.name, bool(c.passed), _f(c.margin), int(c.applicable))
            for c in report.checks.values()]
    rows += [("info:" + c.name, bool(c.passed), _f(c.margin), int(c.applicable))
             for c in report.informational.values()]
    return Table("theorems", THEOREM_COLS, rows)


def build_tables(runs: Sequence[tuple], theorems=None) -> list[Table]:
    """Tables for one or more ``(outcome, metrics)`` runs.

    Price and player tables come from the first run; the summary has one
    row per run.
    """
    if not runs:
        raise ValueError("nothing to report")
    first = runs[0]
    tables = [price_table(*first), player_table(*first),
              Table("summary", SUMMARY_COLS, [summary_row(o, m) for o, m in runs])]
    if theorems is not None:
        tables.append(theorem_table(theorems))
    return tables


# --------------------------------------------------------------------------
# renderers

def _json_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return format(v, ".17g") if math.isfinite(v) else "null"
    if v is None:
        return "null"
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def render_json(tables: list[Table], extra: dict | None = None) -> str:
    out = ["{"]
    blocks = []
    for key, val in (extra or {}).items():
        blocks.append(f'  "{key}": {_json_value(val)}')
    for t in tables:
        rows = ["    {" + ", ".join(f'"{c}": {_json_value(v)}' for c, v in zip(t.columns, r)) + "}"
                for r in t.rows]
        body = "[\n" + ",\n".join(rows) + "\n  ]" if rows else "[]"
        blocks.append(f'  "{t.name}": {body}')
    out.append(",\n".join(blocks))
    out.append("}")
    return "\n".join(out) + "\n"


def _md_cell(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def render_markdown(tables: list[Table], extra: dict | None = None) -> str:
    parts = []
    if extra:
        parts.append("\n".join(f"- {k}: {_md_cell(v)}" for k, v in extra.items()) + "\n")
    for t in tables:
        lines = [f"## {t.name}", "", "| " + " | ".join(t.columns) + " |",
                 "|" + "|".join("---" for _ in t.columns) + "|"]
        lines += ["| " + " | ".join(_md_cell(v) for v in r) + " |" for r in t.rows]
        parts.append("\n".join(lines) + "\n")
    return "\n".join(parts)


def _csv_cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)  # excel dialect: RFC 4180 quoting, CRLF
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_csv_cell(v) for v in r])
    return buf.getvalue()


def write_tables(tables: list[Table], fmt: str, out_dir, extra: dict | None = None) -> list[Path]:
    if fmt not in FORMATS:
        raise ValueError(f"unknown report format {fmt!r}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            paths = []
            for t in tables:
                p = out / f"{t.name}.csv"
                p.write_text(render_csv(t), encoding="utf-8", newline="")
                paths.append(p)
            return paths
        text = render_json(tables, extra) if fmt == "json" else render_markdown(tables, extra)
        p = out / f"report.{fmt}"
        p.write_text(text, encoding="utf-8")
        return [p]
    except OSError as exc:
        raise ReportError(f"cannot write report to {out}: {exc}") from exc


def write_report(outcome, metrics, theorems=None, format: str = "md", dir=".") -> list[Path]:
    """Write the report for a single clearing run; returns the files written."""
    return write_tables(build_tables([(outcome, metrics)], theorems), format, dir)


def comparison_extra(runs: Sequence[tuple]) -> dict:
    """Differences between modes: the value of the stochastic solution and
    of perfect information, measured on the expected bid cost ``phi``."""
    phi = {o.mode: m.phi for o, m in runs}
    extra = {}
    if "det" in phi and "sto" in phi:
        extra["phi_det_minus_sto"] = phi["det"] - phi["sto"]
    if "sto" in phi and "ws" in phi:
        extra["phi_sto_minus_ws"] = phi["sto"] - phi["ws"]
    return extra


def write_comparison(runs: Sequence[tuple], format: str = "md", dir=".") -> list[Path]:
    """One combined report with a summary row per mode."""
    return write_tables(build_tables(runs), format, dir, comparison_extra(runs))
