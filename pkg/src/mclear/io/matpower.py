"""Reader for the DC-relevant subset of MATPOWER case files.

Accepted assignments (anything else raises :class:`UnsupportedField`)::

    mpc.version = '2';
    mpc.baseMVA = 100;
    mpc.bus     = [ bus_i type Pd ... ];          columns used: bus_i, Pd
    mpc.branch  = [ fbus tbus r x b rateA ... ];  used: fbus, tbus, x, rateA,
                                                  ratio (col 9), status (col 11)
    mpc.gen     = [ bus Pg Qg Qmax Qmin Vg mBase status Pmax ... ];
                                                  used: bus, status, Pmax
    mpc.gencost = [ 2 startup shutdown n c(n-1) ... c0 ];  polynomial only

Susceptances are ``baseMVA / (x * ratio)`` so flows are in MW and angles in
radians.  A ``rateA`` of 0 means unlimited and is mapped to ``UNLIMITED``.
Each generator bids its linear cost coefficient; quadratic terms are
dropped.  Each bus with positive load becomes an inelastic demand bidding
``VOLL``.
"""
from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .errors import ParseError, UnsupportedField
from ..model import (Demand, Generator, Line, MarketCase, Node, PenaltyConfig, ScenarioSet,
                     validate_case)

UNLIMITED = 1e5
VOLL = 1000.0
KNOWN = {"version", "baseMVA", "bus", "branch", "gen", "gencost"}
NEEDED_COLS = {"bus": 3, "branch": 6, "gen": 9, "gencost": 5}


_ASSIGN = re.compile(r"mpc\.(\w+)\s*=\s*")


def _strip_comment(line: str) -> str:
    out, quoted = [], False
    for ch in line:
        if ch == "'":
            quoted = not quoted
        if ch == "%" and not quoted:
            break
        out.append(ch)
    return "".join(out)


def parse_matpower(text: str) -> dict:
    """Raw fields of a MATPOWER file: scalars/strings and 2-d arrays."""
    lines = [_strip_comment(l) for l in text.splitlines()]
    fields: dict = {}
    i = 0
    while i < len(lines):
        raw = lines[i]
        s = raw.strip()
        if not s or s.startswith("function"):
            i += 1
            continue
        m = _ASSIGN.match(s)
        if not m:
            raise ParseError(f"unexpected text {s[:30]!r}", i + 1, raw.find(s) + 1)
        name = m.group(1)
        col = raw.find("mpc.") + 1
        if name not in KNOWN:
            raise UnsupportedField(f"unsupported field mpc.{name}", i + 1, col)
        rest = s[m.end():]
        if rest.startswith("["):
            start = i
            body = [rest[1:]]
            while "]" not in body[-1]:
                i += 1
                if i >= len(lines):
                    raise ParseError(f"unterminated matrix mpc.{name}", start + 1, col)
                body.append(lines[i])
            body[-1] = body[-1][:body[-1].index("]")]
            rows = []
            for k, chunk in enumerate(body):
                for piece in chunk.split(";"):
                    toks = piece.replace(",", " ").split()
                    if not toks:
                        continue
                    try:
                        rows.append([float(t) for t in toks])
                    except ValueError as exc:
                        raise ParseError(f"bad number in mpc.{name}: {exc}", start + k + 1, 1)
            widths = {len(r) for r in rows}
            if len(widths) > 1:
                raise ParseError(f"ragged rows in mpc.{name}", start + 1, col)
            fields[name] = np.array(rows, dtype=float).reshape(len(rows), -1)
        else:
            val = rest.rstrip(";").strip()
            if val.startswith("'"):
                fields[name] = val.strip("'")
            else:
                try:
                    fields[name] = float(val)
                except ValueError:
                    raise ParseError(f"bad value for mpc.{name}", i + 1, col) from None
        i += 1
    for k in ("bus", "branch", "gen"):
        if k not in fields:
            raise ParseError(f"missing mpc.{k}")
    for k, need in NEEDED_COLS.items():
        if k in fields and fields[k].size and fields[k].shape[1] < need:
            raise ParseError(f"mpc.{k} needs at least {need} columns")
    return fields


def load_matpower_subset(path, inc_fraction: float = 0.1, min_inc: float = 0.01,
                         demand_inc: float = 0.001) -> MarketCase:
    """Network and participants of a MATPOWER case, without uncertainty.

    The returned case carries one scenario at installed capacities; attach
    a real scenario set with :func:`mclear.io.generate_scenarios`.
    Incremental bids are ``inc_fraction`` of each generator's cost, never
    below ``min_inc`` (increments must be positive).
    """
    text = Path(path).read_text()
    f = parse_matpower(text)
    base = float(f.get("baseMVA", 100.0))
    bus, branch, gen = f["bus"], f["branch"], f["gen"]

    nodes = [Node(int(b)) for b in bus[:, 0]]
    lines = []
    for row in branch:
        if row.shape[0] > 10 and row[10] == 0:
            continue
        x = row[3]
        if x == 0:
            raise UnsupportedField(f"branch {int(row[0])}-{int(row[1])} has zero reactance")
        tap = row[8] if row.shape[0] > 8 and row[8] != 0 else 1.0
        rate = row[5] if row[5] > 0 else UNLIMITED
        lines.append(Line(len(lines) + 1, int(row[0]), int(row[1]), base / abs(x * tap), rate))

    cost = f.get("gencost")
    gens = []
    for k, row in enumerate(gen):
        if row[7] <= 0:
            continue
        alpha = 0.0
        if cost is not None and k < cost.shape[0]:
            c = cost[k]
            if c[0] != 2:
                raise UnsupportedField(f"gencost model {int(c[0])} (only polynomial is read)")
            n = int(c[3])
            coefs = c[4:4 + n]
            alpha = float(coefs[-2]) if n >= 2 else 0.0
        inc = max(inc_fraction * alpha, min_inc)
        gens.append(Generator(len(gens) + 1, int(row[0]), alpha, inc, inc, float(row[8])))

    dems = [Demand(k + 1, int(b[0]), VOLL, demand_inc, demand_inc, float(b[2]))
            for k, b in enumerate(r for r in bus if r[2] > 0)]
    sc = ScenarioSet(np.ones(1), [[g.installed_cap for g in gens]],
                     [[d.installed_cap for d in dems]], [[l.installed_cap for l in lines]])
    return validate_case(MarketCase(nodes, lines, gens, dems, PenaltyConfig(), sc,
                                    name=Path(path).stem))
