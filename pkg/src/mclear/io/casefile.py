"""Versioned JSON case files.

Layout (version 1; every key below is required unless marked optional)::

    {
      "format": "mclear-case",
      "version": 1,
      "name": "system1",                                    (optional)
      "nodes": [{"id": 1, "angle_min": -10.0, "angle_max": 10.0}, ...],
      "lines": [{"id": 1, "snd": 1, "rec": 2, "susceptance": 50.0,
                 "installed_cap": 25.0}, ...],
      "generators": [{"id": 1, "node": 1, "bid_da": 10.0, "inc_up": 1.0,
                      "inc_dn": 1.0, "installed_cap": 100.0}, ...],
      "demands": [... same keys as generators ...],
      "penalties": {"flow_up": 0.001, "flow_dn": 0.001,
                    "angle_up": 0.001, "angle_dn": 0.001},
      "scenarios": {"probabilities": [...], "gen_cap": [[...], ...],
                    "dem_cap": [[...], ...], "line_cap": [[...], ...]},
      "da_caps": {"g": [...], "d": [...], "f": [...]}       (optional)
    }

Penalty entries may be a number or a list with one value per line/node.
Capacity matrices have one row per scenario.  Unknown keys are errors.

:func:`save_case` writes the canonical form: two-space indentation, one
object per line inside the entity lists, one scenario row per line, and
floats in shortest round-trip notation.  Loading and saving a canonical
file reproduces it byte for byte.
"""
from __future__ import annotations

import json
import math
import re
from pathlib import Path

import numpy as np

from ..model import (DayAheadCaps, Demand, Generator, Line, MarketCase, Node, PenaltyConfig,
                     ScenarioSet, validate_case)
from .errors import ParseError

FORMAT = "mclear-case"
VERSION = 1

_TOP = ("format", "version", "name", "nodes", "lines", "generators", "demands", "penalties",
        "scenarios", "da_caps")
_OPTIONAL = {"name", "da_caps"}
_ENTITY_KEYS = {
    "nodes": ("id", "angle_min", "angle_max"),
    "lines": ("id", "snd", "rec", "susceptance", "installed_cap"),
    "generators": ("id", "node", "bid_da", "inc_up", "inc_dn", "installed_cap"),
    "demands": ("id", "node", "bid_da", "inc_up", "inc_dn", "installed_cap"),
}
_INT_KEYS = {"id", "snd", "rec", "node"}
_PENALTY_KEYS = ("flow_up", "flow_dn", "angle_up", "angle_dn")
_SCENARIO_KEYS = ("probabilities", "gen_cap", "dem_cap", "line_cap")
_DA_KEYS = ("g", "d", "f")
_TYPES = {"nodes": Node, "lines": Line, "generators": Generator, "demands": Demand}


def _locate(text: str, key: str) -> tuple[int, int]:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if not m:
        return 0, 0
    line = text.count("\n", 0, m.start()) + 1
    return line, m.start() - text.rfind("\n", 0, m.start())


class _Reader:
    def __init__(self, text: str):
        self.text = text

    def fail(self, msg: str, key: str | None = None):
        line, col = _locate(self.text, key) if key else (0, 0)
        raise ParseError(msg, line, col)

    def keys(self, obj, allowed, required, where: str):
        if not isinstance(obj, dict):
            self.fail(f"{where} must be an object")
        for k in obj:
            if k not in allowed:
                self.fail(f"unknown key {k!r} in {where}", k)
        for k in required:
            if k not in obj:
                self.fail(f"missing key {k!r} in {where}")

    def number(self, v, where: str, key: str) -> float:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(f"{where}.{key} must be a number", key)
        return float(v)

    def integer(self, v, where: str, key: str) -> int:
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(f"{where}.{key} must be an integer", key)
        return v

    def vector(self, v, where: str, key: str) -> np.ndarray:
        if not isinstance(v, list):
            self.fail(f"{where}.{key} must be a list", key)
        return np.array([self.number(x, where, key) for x in v], dtype=float)

    def matrix(self, v, where: str, key: str, rows: int) -> np.ndarray:
        if not isinstance(v, list) or len(v) != rows:
            self.fail(f"{where}.{key} must have one row per scenario ({rows})", key)
        out = [self.vector(r, where, key) for r in v]
        widths = {r.size for r in out}
        if len(widths) > 1:
            self.fail(f"{where}.{key} has rows of different lengths", key)
        return np.array(out, dtype=float).reshape(rows, widths.pop() if widths else 0)


def _read_scenarios(r: _Reader, sc) -> ScenarioSet:
    r.keys(sc, _SCENARIO_KEYS, _SCENARIO_KEYS, "scenarios")
    probs = r.vector(sc["probabilities"], "scenarios", "probabilities")
    return ScenarioSet(probs, *(r.matrix(sc[k], "scenarios", k, probs.size)
                                for k in _SCENARIO_KEYS[1:]))


def parse_scenarios(text: str) -> ScenarioSet:
    """Parse a standalone ``scenarios`` section (as written by :func:`dump_scenarios`)."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return _read_scenarios(_Reader(text), raw)


def parse_case(text: str) -> MarketCase:
    """Parse and validate the text of a case file."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    r = _Reader(text)
    r.keys(raw, _TOP, [k for k in _TOP if k not in _OPTIONAL], "case")
    if raw["format"] != FORMAT:
        r.fail(f"format must be {FORMAT!r}", "format")
    if raw["version"] != VERSION:
        r.fail(f"unsupported case version {raw['version']!r}", "version")
    name = raw.get("name", "")
    if not isinstance(name, str):
        r.fail("name must be a string", "name")

    groups = {}
    for sec, fields in _ENTITY_KEYS.items():
        items = raw[sec]
        if not isinstance(items, list):
            r.fail(f"{sec} must be a list", sec)
        required = ("id",) if sec == "nodes" else fields
        built = []
        for obj in items:
            r.keys(obj, fields, required, sec)
            vals = {k: (r.integer(v, sec, k) if k in _INT_KEYS else r.number(v, sec, k))
                    for k, v in obj.items()}
            built.append(_TYPES[sec](**vals))
        groups[sec] = built

    pen = raw["penalties"]
    r.keys(pen, _PENALTY_KEYS, _PENALTY_KEYS, "penalties")
    pvals = {k: (r.vector(v, "penalties", k) if isinstance(v, list)
                 else r.number(v, "penalties", k)) for k, v in pen.items()}

    scen = _read_scenarios(r, raw["scenarios"])

    da = None
    if "da_caps" in raw:
        r.keys(raw["da_caps"], _DA_KEYS, _DA_KEYS, "da_caps")
        da = DayAheadCaps(*(r.vector(raw["da_caps"][k], "da_caps", k) for k in _DA_KEYS))

    case = MarketCase(groups["nodes"], groups["lines"], groups["generators"], groups["demands"],
                      PenaltyConfig(**pvals), scen, da, name)
    return validate_case(case)


def load_case(path) -> MarketCase:
    return parse_case(Path(path).read_text(encoding="utf-8"))


# --------------------------------------------------------------------------
# canonical writer

def _num(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        raise ValueError("case files cannot hold non-finite numbers")
    return repr(v)


def _row(vals) -> str:
    return "[" + ", ".join(_num(v) for v in vals) + "]"


def _obj(d: dict) -> str:
    return "{" + ", ".join(f"{json.dumps(k)}: {_num(v)}" for k, v in d.items()) + "}"


def _block(items: list[str], indent: str) -> str:
    if not items:
        return "[]"
    inner = indent + "  "
    return "[\n" + ",\n".join(inner + s for s in items) + "\n" + indent + "]"


def _penalty(v) -> str:
    arr = np.asarray(v, dtype=float)
    return _num(arr.item()) if arr.ndim == 0 else _row(arr)


def _scenario_block(sc: ScenarioSet, indent: str) -> str:
    inner = indent + "  "
    parts = [f'{inner}"probabilities": {_row(sc.probabilities)}']
    for k in _SCENARIO_KEYS[1:]:
        parts.append(f'{inner}"{k}": {_block([_row(r) for r in getattr(sc, k)], inner)}')
    return "{\n" + ",\n".join(parts) + "\n" + indent + "}"


def dump_scenarios(sc: ScenarioSet) -> str:
    """Canonical text of a scenario set, mergeable as a case's ``scenarios`` value."""
    return _scenario_block(sc, "") + "\n"


def dump_case(case: MarketCase) -> str:
    """Canonical text of ``case``."""
    out = ["{", f'  "format": {json.dumps(FORMAT)},', f'  "version": {VERSION},']
    if case.name:
        out.append(f'  "name": {json.dumps(case.name)},')
    for sec, fields in _ENTITY_KEYS.items():
        objs = [_obj({k: getattr(x, k) for k in fields}) for x in getattr(case, sec)]
        out.append(f'  "{sec}": {_block(objs, "  ")},')
    pen = ", ".join(f'"{k}": {_penalty(getattr(case.penalties, k))}' for k in _PENALTY_KEYS)
    out.append('  "penalties": {' + pen + "},")
    tail = "," if case.da_caps is not None else ""
    out.append('  "scenarios": ' + _scenario_block(case.scenarios, "  ") + tail)
    if case.da_caps is not None:
        da = ", ".join(f'"{k}": {_row(getattr(case.da_caps, k))}' for k in _DA_KEYS)
        out.append('  "da_caps": {' + da + "}")
    out.append("}")
    return "\n".join(out) + "\n"


def save_case(case: MarketCase, path) -> Path:
    path = Path(path)
    path.write_text(dump_case(case), encoding="utf-8")
    return path
