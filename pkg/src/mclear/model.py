"""Market instance types and the discrete-distribution helpers.

A :class:`MarketCase` bundles a DC network, the bidding participants, the
penalty parameters of the stochastic formulation and a finite scenario set.
Everything is immutable once built; :func:`validate_case` checks the
invariants.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

DEFAULT_ANGLE_LIMIT = 10.0
PROB_TOL = 1e-12


class InvalidCase(ValueError):
    """Raised when a case violates one or more invariants."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("invalid case: " + "; ".join(self.problems))


class EmptyDistribution(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    angle_min: float = -DEFAULT_ANGLE_LIMIT
    angle_max: float = DEFAULT_ANGLE_LIMIT


@dataclass(frozen=True)
class Line:
    id: int
    snd: int
    rec: int
    susceptance: float
    installed_cap: float


@dataclass(frozen=True)
class Generator:
    id: int
    node: int
    bid_da: float
    inc_up: float
    inc_dn: float
    installed_cap: float

    @property
    def bid_up(self) -> float:
        """Real-time price for over-delivery, ``bid_da + inc_up``."""
        return self.bid_da + self.inc_up

    @property
    def bid_dn(self) -> float:
        """Real-time buy-back price for under-delivery, ``bid_da - inc_dn``."""
        return self.bid_da - self.inc_dn


@dataclass(frozen=True)
class Demand:
    id: int
    node: int
    bid_da: float
    inc_up: float
    inc_dn: float
    installed_cap: float

    @property
    def bid_up(self) -> float:
        return self.bid_da + self.inc_up

    @property
    def bid_dn(self) -> float:
        return self.bid_da - self.inc_dn


@dataclass(frozen=True)
class PenaltyConfig:
    """Deviation penalties on line flows ($/MWh) and phase angles ($/rad).

    Scalars apply to every line/node; arrays give per-element values.
    """

    flow_up: float | np.ndarray = 0.001
    flow_dn: float | np.ndarray = 0.001
    angle_up: float | np.ndarray = 0.001
    angle_dn: float | np.ndarray = 0.001

    def per_line(self, n_lines: int) -> tuple[np.ndarray, np.ndarray]:
        return (np.broadcast_to(np.asarray(self.flow_up, float), (n_lines,)).copy(),
                np.broadcast_to(np.asarray(self.flow_dn, float), (n_lines,)).copy())

    def per_node(self, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
        return (np.broadcast_to(np.asarray(self.angle_up, float), (n_nodes,)).copy(),
                np.broadcast_to(np.asarray(self.angle_dn, float), (n_nodes,)).copy())

    def scaled(self, t: float) -> "PenaltyConfig":
        return PenaltyConfig(*(np.asarray(v, float) * t for v in
                               (self.flow_up, self.flow_dn, self.angle_up, self.angle_dn)))


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Probabilities and realized capacities, one row per scenario."""

    probabilities: np.ndarray
    gen_cap: np.ndarray
    dem_cap: np.ndarray
    line_cap: np.ndarray

    def __post_init__(self):
        for name in ("probabilities", "gen_cap", "dem_cap", "line_cap"):
            arr = np.array(getattr(self, name), dtype=float)
            if name != "probabilities" and arr.ndim == 1:
                arr = arr.reshape(len(self.probabilities), -1) if arr.size else \
                    np.zeros((len(self.probabilities), 0))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def count(self) -> int:
        return len(self.probabilities)

    def __eq__(self, other):
        if not isinstance(other, ScenarioSet):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("probabilities", "gen_cap", "dem_cap", "line_cap"))

    def subset(self, index: int) -> "ScenarioSet":
        """Single-scenario set (probability one) for scenario ``index``."""
        return ScenarioSet(np.ones(1), self.gen_cap[index:index + 1],
                           self.dem_cap[index:index + 1], self.line_cap[index:index + 1])


@dataclass(frozen=True, eq=False)
class DayAheadCaps:
    g: np.ndarray
    d: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        for name in ("g", "d", "f"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __eq__(self, other):
        if not isinstance(other, DayAheadCaps):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "gdf")


@dataclass(frozen=True)
class MarketCase:
    nodes: tuple[Node, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    demands: tuple[Demand, ...]
    penalties: PenaltyConfig
    scenarios: ScenarioSet
    da_caps: DayAheadCaps | None = None
    name: str = ""
    validated: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in ("nodes", "lines", "generators", "demands"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    # index helpers -------------------------------------------------------
    @property
    def node_index(self) -> dict[int, int]:
        return {n.id: k for k, n in enumerate(self.nodes)}

    def gen_nodes(self) -> np.ndarray:
        idx = self.node_index
        return np.array([idx[g.node] for g in self.generators], dtype=int)

    def dem_nodes(self) -> np.ndarray:
        idx = self.node_index
        return np.array([idx[d.node] for d in self.demands], dtype=int)

    def line_ends(self) -> tuple[np.ndarray, np.ndarray]:
        idx = self.node_index
        return (np.array([idx[l.snd] for l in self.lines], dtype=int),
                np.array([idx[l.rec] for l in self.lines], dtype=int))

    def with_scenarios(self, scenarios: ScenarioSet) -> "MarketCase":
        return replace(self, scenarios=scenarios, validated=False)

    def with_generators(self, generators: Iterable[Generator]) -> "MarketCase":
        return replace(self, generators=tuple(generators), validated=False)

    def with_demands(self, demands: Iterable[Demand]) -> "MarketCase":
        return replace(self, demands=tuple(demands), validated=False)

    def with_penalties(self, penalties: PenaltyConfig) -> "MarketCase":
        return replace(self, penalties=penalties, validated=False)


# --------------------------------------------------------------------------
# validation

def _check_participants(kind, items, node_ids, problems):
    seen = set()
    for p in items:
        tag = f"{kind} {p.id}"
        if p.id in seen:
            problems.append(f"duplicate {kind} id {p.id}")
        seen.add(p.id)
        if p.node not in node_ids:
            problems.append(f"{tag}: unknown node {p.node}")
        if not p.bid_da >= 0:
            problems.append(f"{tag}: negative day-ahead bid {p.bid_da}")
        if not p.inc_up > 0:
            problems.append(f"{tag}: degenerate incremental bid inc_up={p.inc_up} (must be > 0)")
        if not p.inc_dn > 0:
            problems.append(f"{tag}: degenerate incremental bid inc_dn={p.inc_dn} (must be > 0)")
        if not p.installed_cap >= 0:
            problems.append(f"{tag}: negative installed capacity")


def _check_caps(label, caps, installed, problems, tol=1e-9):
    if caps.shape[1] != len(installed):
        problems.append(f"{label}: expected {len(installed)} columns, got {caps.shape[1]}")
        return
    if caps.size == 0:
        return
    if np.any(caps < -tol):
        problems.append(f"{label}: negative realized capacity")
    over = caps > np.asarray(installed)[None, :] + tol
    if np.any(over):
        w, k = np.argwhere(over)[0]
        problems.append(f"{label}: scenario {w} element {k} exceeds installed capacity")


def validate_case(case: MarketCase) -> MarketCase:
    """Check every invariant and return the completed, validated case.

    Day-ahead capacities are left as given; when absent they are derived
    on demand by ``clearing.summarize_capacities``.  Raises
    :class:`InvalidCase` listing all violations found.
    """
    problems: list[str] = []
    node_ids = [n.id for n in case.nodes]
    if len(set(node_ids)) != len(node_ids):
        problems.append("duplicate node ids")
    node_set = set(node_ids)
    for n in case.nodes:
        if not n.angle_min <= n.angle_max:
            problems.append(f"node {n.id}: angle_min > angle_max")
    for l in case.lines:
        if l.snd == l.rec:
            problems.append(f"line {l.id}: snd == rec")
        if l.snd not in node_set or l.rec not in node_set:
            problems.append(f"line {l.id}: unknown endpoint")
        if not l.susceptance > 0:
            problems.append(f"line {l.id}: susceptance must be > 0")
        if not l.installed_cap >= 0:
            problems.append(f"line {l.id}: negative installed capacity")
    _check_participants("generator", case.generators, node_set, problems)
    _check_participants("demand", case.demands, node_set, problems)

    pen = case.penalties
    for name in ("flow_up", "flow_dn", "angle_up", "angle_dn"):
        if np.any(np.asarray(getattr(pen, name)) <= 0):
            problems.append(f"penalty {name} must be strictly positive")
    for name, n in (("flow_up", len(case.lines)), ("flow_dn", len(case.lines)),
                    ("angle_up", len(case.nodes)), ("angle_dn", len(case.nodes))):
        arr = np.asarray(getattr(pen, name))
        if arr.ndim and arr.shape != (n,):
            problems.append(f"penalty {name}: expected {n} entries")

    sc = case.scenarios
    p = sc.probabilities
    if p.ndim != 1 or p.size == 0:
        problems.append("scenario set is empty")
    else:
        if np.any(p <= 0):
            problems.append("scenario probabilities must be > 0")
        if abs(p.sum() - 1.0) > PROB_TOL:
            problems.append(f"probability sum {p.sum()!r} != 1")
        for label, caps, inst in (
                ("gen_cap", sc.gen_cap, [g.installed_cap for g in case.generators]),
                ("dem_cap", sc.dem_cap, [d.installed_cap for d in case.demands]),
                ("line_cap", sc.line_cap, [l.installed_cap for l in case.lines])):
            if caps.ndim != 2 or caps.shape[0] != p.size:
                problems.append(f"{label}: expected one row per scenario")
            else:
                _check_caps(label, caps, inst, problems)

    if case.da_caps is not None:
        for label, caps, inst in (
                ("da_caps.g", case.da_caps.g, [g.installed_cap for g in case.generators]),
                ("da_caps.d", case.da_caps.d, [d.installed_cap for d in case.demands]),
                ("da_caps.f", case.da_caps.f, [l.installed_cap for l in case.lines])):
            if caps.shape != (len(inst),):
                problems.append(f"{label}: wrong length")
            elif np.any(caps < 0) or np.any(caps > np.asarray(inst) + 1e-9):
                problems.append(f"{label}: outside [0, installed capacity]")

    if problems:
        raise InvalidCase(problems)

    return replace(case, validated=True)


def ensure_valid(case: MarketCase) -> MarketCase:
    return case if case.validated else validate_case(case)


# --------------------------------------------------------------------------
# network

def incidence(case: MarketCase) -> np.ndarray:
    """Line-node susceptance matrix: +B at the receiving end, -B at the sender.

    Row ``l`` dotted with the node angles gives the flow on line ``l``.
    """
    snd, rec = case.line_ends()
    out = np.zeros((len(case.lines), len(case.nodes)))
    b = np.array([l.susceptance for l in case.lines], dtype=float)
    rows = np.arange(len(case.lines))
    out[rows, rec] = b
    out[rows, snd] = -b
    return out


# --------------------------------------------------------------------------
# distributions

@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    probabilities: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float).ravel()
        v = np.array(self.values, dtype=float).ravel()
        if p.shape != v.shape:
            raise ValueError("probabilities and values differ in length")
        if p.size:
            if np.any(p <= 0):
                raise ValueError("probabilities must be > 0")
            if abs(p.sum() - 1.0) > PROB_TOL:
                raise ValueError(f"probabilities sum to {p.sum()!r}")
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "DiscreteDistribution":
        pairs = list(pairs)
        return cls([p for p, _ in pairs], [v for _, v in pairs])

    @classmethod
    def uniform(cls, values) -> "DiscreteDistribution":
        v = np.asarray(values, dtype=float)
        return cls(np.full(v.size, 1.0 / v.size), v)

    def mean(self) -> float:
        return float(self.probabilities @ self.values)


def quantile(dist: DiscreteDistribution, p: float) -> float:
    """Smallest support value whose cumulative probability reaches ``p``.

    No interpolation: at an atom of the CDF the lower value wins.
    """
    if dist.values.size == 0:
        raise EmptyDistribution("quantile of an empty distribution")
    if not 0 < p <= 1:
        raise ValueError(f"p must lie in (0, 1], got {p}")
    order = np.argsort(dist.values, kind="stable")
    v = dist.values[order]
    cdf = np.cumsum(dist.probabilities[order])
    # guard against round-off in the running sum (1/3 + 1/3 + 1/3 etc.)
    k = int(np.searchsorted(cdf, p - 1e-12, side="left"))
    return float(v[min(k, v.size - 1)])


def median(dist: DiscreteDistribution) -> float:
    return quantile(dist, 0.5)
