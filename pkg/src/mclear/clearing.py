"""Deterministic, stochastic and wait-and-see market clearing.

Every formulation is assembled as a :class:`~mclear.lp.LinearProgram` and
solved with :func:`mclear.lp.solve`.  Nodal prices are read off the duals of
the balance rows; under the solver's sign convention those duals are prices
directly (an extra MW of load at a node raises cost by the dual).
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lp import EQ, Infeasible, LinearProgram, LpBuilder, SolverOptions, solve
from .model import DayAheadCaps, DiscreteDistribution, MarketCase, ensure_valid, quantile

DET, STO, WS = "det", "sto", "ws"
STATISTICS = ("mean", "median", "max")


class InfeasibleRecourse(Infeasible):
    """A real-time scenario admits no feasible correction of the day-ahead plan."""

    def __init__(self, scenario: int):
        self.scenario = scenario
        super().__init__(f"real-time recourse infeasible in scenario {scenario}")


@dataclass(eq=False)
class DayAheadResult:
    """Cleared day-ahead quantities and prices.

    Arrays are 1-d, except for wait-and-see outcomes where each carries a
    leading scenario axis.
    """

    g: np.ndarray
    d: np.ndarray
    f: np.ndarray
    theta: np.ndarray
    pi: np.ndarray
    objective: float = float("nan")


@dataclass(eq=False)
class RealTimeResult:
    """Real-time quantities and prices, one row per scenario."""

    G: np.ndarray
    D: np.ndarray
    F: np.ndarray
    Theta: np.ndarray
    Pi: np.ndarray
    objectives: np.ndarray | None = None


@dataclass(eq=False)
class ClearingOutcome:
    """Result of one clearing run.

    ``objective`` is the expected total bid cost of the formulation: the
    day-ahead cost plus expected recourse cost for ``det``, the extensive-form
    optimum (penalties included) for ``sto``, and the probability-weighted
    per-scenario optimum for ``ws``.
    """

    mode: str
    case: MarketCase
    day_ahead: DayAheadResult
    real_time: RealTimeResult
    objective: float
    probabilities: np.ndarray
    statistic: str | None = None
    extras: dict = field(default_factory=dict)

    def da_per_scenario(self) -> DayAheadResult:
        """Day-ahead arrays broadcast to one row per scenario."""
        S = self.probabilities.size
        da = self.day_ahead
        if self.mode == WS:
            return da
        tile = lambda a: np.broadcast_to(a, (S,) + a.shape).copy()
        return DayAheadResult(tile(da.g), tile(da.d), tile(da.f), tile(da.theta),
                              tile(da.pi), da.objective)


# --------------------------------------------------------------------------
# helpers

def _threads() -> int:
    raw = os.environ.get("MCLEAR_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = min(4, os.cpu_count() or 1)
    return max(1, n)


def _pmap(fn: Callable, items: Sequence):
    """Ordered map, threaded up to MCLEAR_THREADS workers."""
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _bids(case: MarketCase):
    gens, dems = case.generators, case.demands
    a = lambda xs, k: np.array([getattr(x, k) for x in xs], dtype=float)
    return {
        "ag": a(gens, "bid_da"), "ag_up": a(gens, "bid_up"), "ag_dn": a(gens, "bid_dn"),
        "ad": a(dems, "bid_da"), "ad_up": a(dems, "bid_up"), "ad_dn": a(dems, "bid_dn"),
    }


def _balance_terms(case: MarketCase, g, d, f, sign: float = 1.0):
    """Coefficient lists for each nodal balance row.

    Row n reads  sum_{rec=n} f - sum_{snd=n} f + sum_{i at n} g - sum_{j at n} d.
    """
    terms: list[list[tuple[int, float]]] = [[] for _ in case.nodes]
    snd, rec = case.line_ends()
    for k, (s, r) in enumerate(zip(snd, rec)):
        terms[r].append((f[k], sign))
        terms[s].append((f[k], -sign))
    for k, n in enumerate(case.gen_nodes()):
        terms[n].append((g[k], sign))
    for k, n in enumerate(case.dem_nodes()):
        terms[n].append((d[k], -sign))
    return terms


def _add_network(b: LpBuilder, case: MarketCase, g, d, f, th, tag) -> tuple[np.ndarray, np.ndarray]:
    """Balance rows and flow/angle coupling rows; returns their row indices."""
    bal = [b.add_row((tag, "balance", n.id), t, EQ, 0.0)
           for n, t in zip(case.nodes, _balance_terms(case, g, d, f))]
    snd, rec = case.line_ends()
    cpl = []
    for k, line in enumerate(case.lines):
        B = line.susceptance
        cpl.append(b.add_row((tag, "flow", line.id),
                             [(f[k], 1.0), (th[rec[k]], -B), (th[snd[k]], B)], EQ, 0.0))
    return np.array(bal, dtype=int), np.array(cpl, dtype=int)


# --------------------------------------------------------------------------
# capacities

def summarize_capacities(case: MarketCase, statistic: str = "mean") -> DayAheadCaps:
    """Day-ahead capacities for the deterministic model.

    ``statistic`` reduces each realized-capacity column over the scenarios.
    Capacities stored explicitly on the case take precedence.
    """
    if statistic not in STATISTICS:
        raise ValueError(f"unknown statistic {statistic!r}")
    if case.da_caps is not None:
        return case.da_caps
    sc = case.scenarios
    p = sc.probabilities

    def reduce(cols: np.ndarray) -> np.ndarray:
        if statistic == "mean":
            return p @ cols
        if statistic == "max":
            return cols.max(axis=0) if cols.size else np.zeros(cols.shape[1])
        return np.array([quantile(DiscreteDistribution(p, cols[:, k]), 0.5)
                         for k in range(cols.shape[1])])

    return DayAheadCaps(reduce(sc.gen_cap), reduce(sc.dem_cap), reduce(sc.line_cap))


# --------------------------------------------------------------------------
# deterministic model

def build_deterministic_dayahead(case: MarketCase, caps: DayAheadCaps) -> LinearProgram:
    case = ensure_valid(case)
    bids = _bids(case)
    b = LpBuilder()
    g = [b.add_var(("g", x.id), c, 0.0, u) for x, c, u in zip(case.generators, bids["ag"], caps.g)]
    d = [b.add_var(("d", x.id), -c, 0.0, u) for x, c, u in zip(case.demands, bids["ad"], caps.d)]
    f = [b.add_var(("f", x.id), 0.0, -u, u) for x, u in zip(case.lines, caps.f)]
    th = [b.add_var(("theta", n.id), 0.0, n.angle_min, n.angle_max) for n in case.nodes]
    bal, cpl = _add_network(b, case, g, d, f, th, "da")
    lp = b.build()
    lp.meta = {"g": np.array(g, int), "d": np.array(d, int), "f": np.array(f, int),
               "theta": np.array(th, int), "balance": bal, "coupling": cpl}
    return lp


def _read_dayahead(lp: LinearProgram, sol) -> DayAheadResult:
    m, x = lp.meta, sol.primal
    return DayAheadResult(x[m["g"]], x[m["d"]], x[m["f"]], x[m["theta"]],
                          sol.row_duals[m["balance"]], sol.objective_value)


def build_realtime_recourse(case: MarketCase, da: DayAheadResult, scenario: int) -> LinearProgram:
    """Recourse LP for one scenario with the day-ahead plan held fixed.

    Deviations ``X - x`` are split into nonnegative pairs ``up - dn`` so the
    asymmetric real-time bids can be priced linearly.
    """
    case = ensure_valid(case)
    sc = case.scenarios
    if not 0 <= scenario < sc.count:
        raise IndexError(f"scenario {scenario} out of range")
    bids = _bids(case)
    b = LpBuilder()
    Gc, Dc, Fc = sc.gen_cap[scenario], sc.dem_cap[scenario], sc.line_cap[scenario]
    G = [b.add_var(("G", x.id), 0.0, 0.0, u) for x, u in zip(case.generators, Gc)]
    D = [b.add_var(("D", x.id), 0.0, 0.0, u) for x, u in zip(case.demands, Dc)]
    F = [b.add_var(("F", x.id), 0.0, -u, u) for x, u in zip(case.lines, Fc)]
    Th = [b.add_var(("Theta", n.id), 0.0, n.angle_min, n.angle_max) for n in case.nodes]
    # generator over-delivery is bought at bid_up, under-delivery sold back at bid_dn
    gu = [b.add_var(("G+", x.id), c, 0.0) for x, c in zip(case.generators, bids["ag_up"])]
    gd = [b.add_var(("G-", x.id), -c, 0.0) for x, c in zip(case.generators, bids["ag_dn"])]
    # extra consumption is valued at bid_dn, shortfall refunded at bid_up
    du = [b.add_var(("D+", x.id), -c, 0.0) for x, c in zip(case.demands, bids["ad_dn"])]
    dd = [b.add_var(("D-", x.id), c, 0.0) for x, c in zip(case.demands, bids["ad_up"])]
    for k, x in enumerate(case.generators):
        b.add_row(("rt", "dev", "G", x.id), [(G[k], 1.0), (gu[k], -1.0), (gd[k], 1.0)],
                  EQ, float(da.g[k]))
    for k, x in enumerate(case.demands):
        b.add_row(("rt", "dev", "D", x.id), [(D[k], 1.0), (du[k], -1.0), (dd[k], 1.0)],
                  EQ, float(da.d[k]))
    bal, cpl = _add_network(b, case, G, D, F, Th, "rt")
    lp = b.build()
    lp.meta = {"G": np.array(G, int), "D": np.array(D, int), "F": np.array(F, int),
               "Theta": np.array(Th, int), "balance": bal, "coupling": cpl}
    return lp


def clear_deterministic(case: MarketCase, statistic: str = "mean",
                        opts: SolverOptions | None = None) -> ClearingOutcome:
    """Clear day-ahead on summarized capacities, then settle every scenario."""
    case = ensure_valid(case)
    caps = summarize_capacities(case, statistic)
    lp = build_deterministic_dayahead(case, caps)
    da = _read_dayahead(lp, solve(lp, opts))

    def recourse(w: int):
        rlp = build_realtime_recourse(case, da, w)
        try:
            sol = solve(rlp, opts)
        except Infeasible as exc:
            raise InfeasibleRecourse(w) from exc
        m, x = rlp.meta, sol.primal
        return (x[m["G"]], x[m["D"]], x[m["F"]], x[m["Theta"]],
                sol.row_duals[m["balance"]], sol.objective_value)

    rows = _pmap(recourse, range(case.scenarios.count))
    rt = RealTimeResult(*(np.array([r[k] for r in rows]) for k in range(6)))
    p = case.scenarios.probabilities
    return ClearingOutcome(DET, case, da, rt, da.objective + float(p @ rt.objectives), p.copy(),
                           statistic=statistic, extras={"caps": caps})


# --------------------------------------------------------------------------
# stochastic model

def build_stochastic_extensive(case: MarketCase) -> LinearProgram:
    """Extensive form over all scenarios.

    First-stage variables carry no bounds of their own.  Each scenario's
    residual balance row is written in the plain quantities, so with the
    probability-weighted objective its dual equals ``p(w) * Pi(w)``.
    """
    case = ensure_valid(case)
    sc = case.scenarios
    bids = _bids(case)
    fu, fd = case.penalties.per_line(len(case.lines))
    tu, td = case.penalties.per_node(len(case.nodes))
    gens, dems, lines, nodes = case.generators, case.demands, case.lines, case.nodes

    b = LpBuilder()
    g = [b.add_var(("g", x.id), c) for x, c in zip(gens, bids["ag"])]
    d = [b.add_var(("d", x.id), -c) for x, c in zip(dems, bids["ad"])]
    f = [b.add_var(("f", x.id)) for x in lines]
    th = [b.add_var(("theta", n.id)) for n in nodes]
    bal, cpl = _add_network(b, case, g, d, f, th, "da")

    S = sc.count
    lay = {k: [] for k in ("G", "D", "F", "Theta", "rbal", "rcpl", "pairs")}
    for w in range(S):
        p = float(sc.probabilities[w])
        G = [b.add_var(("G", w, x.id), 0.0, 0.0, u) for x, u in zip(gens, sc.gen_cap[w])]
        D = [b.add_var(("D", w, x.id), 0.0, 0.0, u) for x, u in zip(dems, sc.dem_cap[w])]
        F = [b.add_var(("F", w, x.id), 0.0, -u, u) for x, u in zip(lines, sc.line_cap[w])]
        Th = [b.add_var(("Theta", w, n.id), 0.0, n.angle_min, n.angle_max) for n in nodes]
        pairs = []

        def pair(kind, ident, X, x, c_up, c_dn):
            # X - x = up - dn
            up = b.add_var((kind + "+", w, ident), p * c_up, 0.0)
            dn = b.add_var((kind + "-", w, ident), p * c_dn, 0.0)
            b.add_row(("dev", kind, w, ident), [(X, 1.0), (x, -1.0), (up, -1.0), (dn, 1.0)],
                      EQ, 0.0)
            pairs.append((up, dn))

        for k, x in enumerate(gens):
            pair("G", x.id, G[k], g[k], bids["ag_up"][k], -bids["ag_dn"][k])
        for k, x in enumerate(dems):
            pair("D", x.id, D[k], d[k], -bids["ad_dn"][k], bids["ad_up"][k])
        for k, x in enumerate(lines):
            pair("F", x.id, F[k], f[k], fu[k], fd[k])
        for k, n in enumerate(nodes):
            pair("Theta", n.id, Th[k], th[k], tu[k], td[k])

        # residual balance: real-time terms minus first-stage terms
        now = _balance_terms(case, G, D, F)
        before = _balance_terms(case, g, d, f, sign=-1.0)
        rbal = [b.add_row(("rt", "balance", w, n.id), now[k] + before[k], EQ, 0.0)
                for k, n in enumerate(nodes)]
        snd, rec = case.line_ends()
        rcpl = [b.add_row(("rt", "flow", w, x.id),
                          [(F[k], 1.0), (Th[rec[k]], -x.susceptance), (Th[snd[k]], x.susceptance)],
                          EQ, 0.0) for k, x in enumerate(lines)]
        for key, val in (("G", G), ("D", D), ("F", F), ("Theta", Th), ("rbal", rbal),
                         ("rcpl", rcpl), ("pairs", pairs)):
            lay[key].append(val)

    lp = b.build()
    shape = lambda v, n: np.array(v, dtype=int).reshape(S, n)
    lp.meta = {
        "g": np.array(g, int), "d": np.array(d, int), "f": np.array(f, int),
        "theta": np.array(th, int), "balance": bal, "coupling": cpl,
        "G": shape(lay["G"], len(gens)), "D": shape(lay["D"], len(dems)),
        "F": shape(lay["F"], len(lines)), "Theta": shape(lay["Theta"], len(nodes)),
        "rt_balance": shape(lay["rbal"], len(nodes)),
        "rt_coupling": shape(lay["rcpl"], len(lines)),
        "pairs": np.array(lay["pairs"], dtype=int).reshape(S, -1, 2),
    }
    return lp


def clear_stochastic(case: MarketCase, opts: SolverOptions | None = None) -> ClearingOutcome:
    case = ensure_valid(case)
    lp = build_stochastic_extensive(case)
    sol = solve(lp, opts)
    m, x, y = lp.meta, sol.primal, sol.row_duals
    p = case.scenarios.probabilities
    da = DayAheadResult(x[m["g"]], x[m["d"]], x[m["f"]], x[m["theta"]], y[m["balance"]],
                        sol.objective_value)
    weighted = y[m["rt_balance"]]
    rt = RealTimeResult(x[m["G"]], x[m["D"]], x[m["F"]], x[m["Theta"]], weighted / p[:, None])
    pairs = x[m["pairs"]]
    return ClearingOutcome(STO, case, da, rt, sol.objective_value, p.copy(),
                           extras={"rt_balance_duals": weighted, "slack_pairs": pairs,
                                   "lp_size": (lp.n_vars, lp.n_rows), "method": sol.method})


def clear_wait_and_see(case: MarketCase, opts: SolverOptions | None = None) -> ClearingOutcome:
    """Perfect-foresight clearing: one deterministic solve per scenario."""
    case = ensure_valid(case)
    sc = case.scenarios

    def one(w: int) -> DayAheadResult:
        caps = DayAheadCaps(sc.gen_cap[w], sc.dem_cap[w], sc.line_cap[w])
        lp = build_deterministic_dayahead(case, caps)
        return _read_dayahead(lp, solve(lp, opts))

    res = _pmap(one, range(sc.count))
    stack = lambda k: np.array([getattr(r, k) for r in res])
    objs = np.array([r.objective for r in res])
    da = DayAheadResult(stack("g"), stack("d"), stack("f"), stack("theta"), stack("pi"),
                        float(sc.probabilities @ objs))
    rt = RealTimeResult(da.g.copy(), da.d.copy(), da.f.copy(), da.theta.copy(), da.pi.copy(),
                        objs)
    return ClearingOutcome(WS, case, da, rt, da.objective, sc.probabilities.copy())


def clear(case: MarketCase, mode: str, statistic: str = "mean",
          opts: SolverOptions | None = None) -> ClearingOutcome:
    if mode == DET:
        return clear_deterministic(case, statistic, opts)
    if mode == STO:
        return clear_stochastic(case, opts)
    if mode == WS:
        return clear_wait_and_see(case, opts)
    raise ValueError(f"unknown mode {mode!r}")
