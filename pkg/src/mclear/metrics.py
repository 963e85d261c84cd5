"""Settlement metrics and numerical checks of the pricing theorems.

Costs, payments, uplifts, surplus and price distortions are computed from a
:class:`~mclear.clearing.ClearingOutcome`.  :func:`verify_theorems` turns the
distortion bounds, implied quantity bounds, quantile convergence and
zero-uplift / revenue-adequacy results into pass/fail checks with margins.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clearing import WS, ClearingOutcome, clear_stochastic
from .model import DiscreteDistribution, MarketCase, ensure_valid, incidence, quantile

pos = lambda x: np.maximum(x, 0.0)
neg = lambda x: np.maximum(-x, 0.0)


class IsolatedNode(ValueError):
    """A node of a multi-node network has no incident line."""


# --------------------------------------------------------------------------
# cost identities (vectorized over any broadcastable shapes)

def supplier_cost(alpha, alpha_up, alpha_dn, g, G):
    """Day-ahead cost plus real-time corrections at the real-time bids."""
    dev = G - g
    return alpha * g + alpha_up * pos(dev) - alpha_dn * neg(dev)


def supplier_cost_increments(alpha, inc_up, inc_dn, g, G):
    """Same cost written with the incremental bids around ``alpha * G``."""
    dev = G - g
    return alpha * G + inc_up * pos(dev) + inc_dn * neg(dev)


def supplier_cost_symmetric(alpha, inc, g, G):
    return alpha * G + inc * np.abs(G - g)


def consumer_cost(alpha, alpha_up, alpha_dn, d, D):
    dev = D - d
    return -alpha * d + alpha_up * neg(dev) - alpha_dn * pos(dev)


def consumer_cost_increments(alpha, inc_up, inc_dn, d, D):
    dev = D - d
    return -alpha * D + inc_up * neg(dev) + inc_dn * pos(dev)


def consumer_cost_symmetric(alpha, inc, d, D):
    return -alpha * D + inc * np.abs(D - d)


# --------------------------------------------------------------------------
# per-scenario settlement

@dataclass(eq=False)
class PlayerCosts:
    Cg: np.ndarray  # (S, G)
    Cd: np.ndarray  # (S, D)


@dataclass(eq=False)
class PlayerPayments:
    Pg: np.ndarray
    Pd: np.ndarray


def _bid_arrays(items):
    get = lambda k: np.array([getattr(x, k) for x in items], dtype=float)
    return get("bid_da"), get("bid_up"), get("bid_dn"), get("inc_up"), get("inc_dn")


def player_costs(case: MarketCase, outcome: ClearingOutcome, check: bool = True) -> PlayerCosts:
    """Per-scenario bid costs of every player.

    With ``check`` the incremental-bid form is evaluated as well and any
    disagreement beyond round-off raises ``ArithmeticError``.
    """
    da = outcome.da_per_scenario()
    rt = outcome.real_time
    a, au, ad, iu, idn = _bid_arrays(case.generators)
    Cg = supplier_cost(a, au, ad, da.g, rt.G)
    b, bu, bd, ju, jdn = _bid_arrays(case.demands)
    Cd = consumer_cost(b, bu, bd, da.d, rt.D)
    if check:
        alt_g = supplier_cost_increments(a, iu, idn, da.g, rt.G)
        alt_d = consumer_cost_increments(b, ju, jdn, da.d, rt.D)
        # round-off is relative to the largest term, not to the (possibly
        # small) net cost
        scale_g = 1.0 + (np.abs(a) + iu + idn) * (np.abs(da.g) + np.abs(rt.G))
        scale_d = 1.0 + (np.abs(b) + ju + jdn) * (np.abs(da.d) + np.abs(rt.D))
        for x, y, sc in ((Cg, alt_g, scale_g), (Cd, alt_d, scale_d)):
            if np.any(np.abs(x - y) > 1e-12 * sc):
                raise ArithmeticError("cost identity violated")
    return PlayerCosts(Cg, Cd)


def player_payments(case: MarketCase, outcome: ClearingOutcome, check: bool = True) -> PlayerPayments:
    """Day-ahead settlement plus real-time correction, per scenario."""
    da = outcome.da_per_scenario()
    rt = outcome.real_time
    gn, dn = case.gen_nodes(), case.dem_nodes()
    Pg = da.g * da.pi[:, gn] + (rt.G - da.g) * rt.Pi[:, gn]
    Pd = -da.d * da.pi[:, dn] - (rt.D - da.d) * rt.Pi[:, dn]
    if check and outcome.mode != WS:
        p = outcome.probabilities
        M = outcome.day_ahead.pi - p @ rt.Pi
        g, d = outcome.day_ahead.g, outcome.day_ahead.d
        eg = g * M[gn] + p @ (rt.G * rt.Pi[:, gn])
        ed = -d * M[dn] - p @ (rt.D * rt.Pi[:, dn])
        for direct, split in ((p @ Pg, eg), (p @ Pd, ed)):
            scale = 1.0 + np.abs(direct).max(initial=0.0)
            if np.abs(direct - split).max(initial=0.0) > 1e-9 * scale:
                raise ArithmeticError("expected-payment decomposition violated")
    return PlayerPayments(Pg, Pd)


@dataclass(eq=False)
class Distortion:
    per_node: np.ndarray
    avg: float
    max: float


def price_distortion(outcome: ClearingOutcome) -> Distortion:
    """Day-ahead price minus expected real-time price at each node.

    Wait-and-see day-ahead prices are scenario dependent; their expectation
    stands in for the day-ahead price.
    """
    p = outcome.probabilities
    pi = outcome.day_ahead.pi
    if pi.ndim == 2:
        pi = p @ pi
    M = pi - p @ outcome.real_time.Pi
    A = np.abs(M)
    return Distortion(M, float(A.mean()) if A.size else 0.0, float(A.max(initial=0.0)))


@dataclass(eq=False)
class PlayerCashflows:
    EC_g: np.ndarray
    EP_g: np.ndarray
    uplift_g: np.ndarray
    EC_d: np.ndarray
    EP_d: np.ndarray
    uplift_d: np.ndarray

    @property
    def total_uplift(self) -> float:
        return float(self.uplift_g.sum() + self.uplift_d.sum())


def uplifts(costs: PlayerCosts, payments: PlayerPayments, probabilities) -> PlayerCashflows:
    p = np.asarray(probabilities)
    ECg, EPg = p @ costs.Cg, p @ payments.Pg
    ECd, EPd = p @ costs.Cd, p @ payments.Pd
    # -min(P - C, 0), written so that whole players get +0.0
    return PlayerCashflows(ECg, EPg, np.maximum(ECg - EPg, 0.0),
                           ECd, EPd, np.maximum(ECd - EPd, 0.0))


def iso_revenue(payments: PlayerPayments, probabilities) -> float:
    """Expected net payment made by the operator (<= 0 means adequate)."""
    p = np.asarray(probabilities)
    return float(p @ payments.Pg.sum(axis=1) + p @ payments.Pd.sum(axis=1))


@dataclass
class Surplus:
    phi: float
    phi_g: float
    phi_d: float
    phi_sto: float
    penalty: float


def social_surplus(case: MarketCase, outcome: ClearingOutcome,
                   costs: PlayerCosts | None = None) -> Surplus:
    """Expected bid cost, split by side, and the penalized version.

    ``phi_sto - phi`` is the expected flow and angle penalty on deviations
    from the day-ahead network state.
    """
    costs = costs or player_costs(case, outcome)
    p = outcome.probabilities
    phi_g = float(p @ costs.Cg.sum(axis=1))
    phi_d = float(p @ costs.Cd.sum(axis=1))
    da, rt = outcome.da_per_scenario(), outcome.real_time
    fu, fd = case.penalties.per_line(len(case.lines))
    tu, td = case.penalties.per_node(len(case.nodes))
    dF, dT = rt.F - da.f, rt.Theta - da.theta
    pen = (fu * pos(dF) + fd * neg(dF)).sum(axis=1) + (tu * pos(dT) + td * neg(dT)).sum(axis=1)
    penalty = float(p @ pen)
    phi = phi_g + phi_d
    return Surplus(phi, phi_g, phi_d, phi + penalty, penalty)


@dataclass(eq=False)
class MetricsReport:
    mode: str
    phi: float
    phi_g: float
    phi_d: float
    phi_sto: float
    distortion: np.ndarray
    M_avg: float
    M_max: float
    cashflows: PlayerCashflows
    iso_revenue: float
    costs: PlayerCosts = field(repr=False)
    payments: PlayerPayments = field(repr=False)

    @property
    def total_uplift(self) -> float:
        return self.cashflows.total_uplift


def compute_metrics(outcome: ClearingOutcome) -> MetricsReport:
    case = outcome.case
    costs = player_costs(case, outcome)
    pays = player_payments(case, outcome)
    s = social_surplus(case, outcome, costs)
    dist = price_distortion(outcome)
    flows = uplifts(costs, pays, outcome.probabilities)
    return MetricsReport(outcome.mode, s.phi, s.phi_g, s.phi_d, s.phi_sto, dist.per_node,
                         dist.avg, dist.max, flows, iso_revenue(pays, outcome.probabilities),
                         costs, pays)


# --------------------------------------------------------------------------
# theorem bounds

@dataclass(eq=False)
class TheoremBounds:
    """Distortion bounds: ``-up <= M <= dn``.

    ``node_up/node_dn`` are the per-node bounds actually applied (participant
    minimum combined with the network term where participants exist);
    ``net_up/net_dn`` the network terms alone; ``single_up/single_dn`` the
    single-node bounds over all players.
    """

    node_up: np.ndarray
    node_dn: np.ndarray
    net_up: np.ndarray
    net_dn: np.ndarray
    has_players: np.ndarray
    player_up: np.ndarray
    player_dn: np.ndarray
    single_up: float
    single_dn: float

    @property
    def max_abs(self) -> float:
        """Largest ``|M|`` compatible with the per-node bounds."""
        return float(np.maximum(self.node_up, self.node_dn).max(initial=0.0))

    @property
    def max_dn(self) -> float:
        return float(self.node_dn.max(initial=0.0))


def theorem_bounds(case: MarketCase) -> TheoremBounds:
    case = ensure_valid(case)
    N = len(case.nodes)
    Binc = incidence(case)
    Bl = np.array([l.susceptance for l in case.lines], dtype=float)
    fu, fd = case.penalties.per_line(len(case.lines))
    tu, td = case.penalties.per_node(N)
    touches = Binc != 0.0  # (L, N)
    denom = touches.T.astype(float) @ Bl
    if N > 1 and np.any(denom == 0.0):
        bad = [case.nodes[k].id for k in np.flatnonzero(denom == 0.0)]
        raise IsolatedNode(f"nodes without lines: {bad}")
    with np.errstate(divide="ignore", invalid="ignore"):
        num_up = (touches * (fu[:, None] + (1.0 - Binc) * fd[:, None])).sum(axis=0) + tu
        num_dn = (touches * Binc * fd[:, None]).sum(axis=0) + td
        net_up = np.where(denom > 0, num_up / np.where(denom > 0, denom, 1.0), np.inf)
        net_dn = np.where(denom > 0, num_dn / np.where(denom > 0, denom, 1.0), np.inf)

    player_up = np.full(N, np.inf)
    player_dn = np.full(N, np.inf)
    for items, nodes in ((case.generators, case.gen_nodes()), (case.demands, case.dem_nodes())):
        for x, n in zip(items, nodes):
            player_up[n] = min(player_up[n], x.inc_up)
            player_dn[n] = min(player_dn[n], x.inc_dn)
    has = np.isfinite(player_up)
    node_up = np.where(has, np.minimum(player_up, net_up), net_up)
    node_dn = np.where(has, np.minimum(player_dn, net_dn), net_dn)
    allp = list(case.generators) + list(case.demands)
    single_up = min((x.inc_up for x in allp), default=np.inf)
    single_dn = min((x.inc_dn for x in allp), default=np.inf)
    if N == 1 and not case.lines:
        node_up = np.array([single_up])
        node_dn = np.array([single_dn])
    return TheoremBounds(node_up, node_dn, net_up, net_dn, has, player_up, player_dn,
                         float(single_up), float(single_dn))


# --------------------------------------------------------------------------
# verification

@dataclass
class Check:
    name: str
    passed: bool
    margin: float  # worst slack; negative means violated
    applicable: int = 0
    notes: list = field(default_factory=list)

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        return f"{state} {self.name}: margin={self.margin:.6g} applicable={self.applicable}"


@dataclass
class TheoremReport:
    checks: dict
    informational: dict
    tol: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def lines(self) -> list[str]:
        out = [c.line() for c in self.checks.values()]
        out += ["info " + c.line() for c in self.informational.values()]
        return out

    def __str__(self):
        return "\n".join(self.lines())


def _interval_check(name, values, lo, hi, tol) -> Check:
    values = np.asarray(values, float)
    if values.size == 0:
        return Check(name, True, np.inf, 0)
    margin = float(np.minimum(values - lo, hi - values).min())
    return Check(name, margin >= -tol, margin, int(values.size))


def quantile_level(inc_up: float, inc_dn: float, side: str) -> float:
    """Probability level at which day-ahead quantities settle."""
    return (inc_up if side == "gen" else inc_dn) / (inc_up + inc_dn)


def verify_theorems(case: MarketCase, outcome: ClearingOutcome, tol: float = 1e-6,
                    zero_tol: float = 1e-9) -> TheoremReport:
    """Check the stochastic pricing theorems on a solved outcome."""
    case = ensure_valid(case)
    p = outcome.probabilities
    da, rt = outcome.day_ahead, outcome.real_time
    if da.g.ndim != 1:
        raise ValueError("verify_theorems needs a here-and-now outcome")
    M = price_distortion(outcome).per_node
    tb = theorem_bounds(case)
    checks, info = {}, {}

    checks["distortion_bounds"] = _interval_check("distortion_bounds", M, -tb.node_up,
                                                  tb.node_dn, tol)
    has = tb.has_players
    info["participant_bounds"] = _interval_check(
        "participant_bounds", M[has], -tb.player_up[has], tb.player_dn[has], tol)

    lo = [rt.G.min(axis=0), rt.D.min(axis=0), rt.F.min(axis=0), rt.Theta.min(axis=0)]
    hi = [rt.G.max(axis=0), rt.D.max(axis=0), rt.F.max(axis=0), rt.Theta.max(axis=0)]
    vals = [da.g, da.d, da.f, da.theta]
    checks["quantity_bounds"] = _interval_check(
        "quantity_bounds", np.concatenate(vals), np.concatenate(lo), np.concatenate(hi), tol)

    # quantile convergence where the distortion vanishes
    worst, n_app, notes = np.inf, 0, []
    for side, items, nodes, x, X in (("gen", case.generators, case.gen_nodes(), da.g, rt.G),
                                     ("dem", case.demands, case.dem_nodes(), da.d, rt.D)):
        for k, (it, n) in enumerate(zip(items, nodes)):
            if abs(M[n]) > zero_tol:
                continue
            n_app += 1
            q = quantile(DiscreteDistribution(p, X[:, k]), quantile_level(it.inc_up, it.inc_dn, side))
            gap = abs(x[k] - q)
            worst = min(worst, -gap)
            if gap > tol:
                notes.append(f"{side} {it.id}: day-ahead {x[k]!r} vs quantile {q!r}")
    checks["quantile_convergence"] = Check("quantile_convergence", not notes,
                                           0.0 if n_app and worst == 0 else worst, n_app, notes)

    costs = player_costs(case, outcome)
    pays = player_payments(case, outcome)
    flows = uplifts(costs, pays, p)
    m_iso = iso_revenue(pays, p)
    up = np.concatenate([flows.uplift_g, flows.uplift_d])
    margin = min(-float(up.max(initial=0.0)), -m_iso) + 0.0  # no -0.0
    checks["uplift_adequacy"] = Check("uplift_adequacy", margin >= -tol, margin, up.size + 1)
    return TheoremReport(checks, info, tol)


# --------------------------------------------------------------------------
# studies

@dataclass
class SweepRow:
    demand_inc: float
    M_max: float
    bound: float
    single_node_bound: float

    @property
    def within(self) -> bool:
        return self.M_max <= self.bound + 1e-12


def bid_sweep(case: MarketCase, demand_inc_values, opts=None) -> list[SweepRow]:
    """Re-clear with each demand increment and compare distortion to its bound.

    ``bound`` is the largest ``|M|`` allowed by the per-node bounds.
    """
    from dataclasses import replace
    from .model import validate_case

    rows = []
    for v in demand_inc_values:
        dems = [replace(d, inc_up=v, inc_dn=v) for d in case.demands]
        c = validate_case(replace(case, demands=tuple(dems), validated=False))
        out = clear_stochastic(c, opts)
        tb = theorem_bounds(c)
        rows.append(SweepRow(float(v), price_distortion(out).max, tb.max_abs,
                             max(tb.single_up, tb.single_dn)))
    return rows


def distortion_range(case: MarketCase, outcome: ClearingOutcome | None = None):
    """Smallest and largest distortion at each node over all optimal duals.

    The optimal dual set of the extensive form is the set of multipliers
    complementary to an optimal primal point.  Each node's distortion is a
    linear function of the duals, so two LPs per node give its range.
    Meant for small cases.
    """
    import scipy.sparse as sp
    from scipy.optimize import linprog

    from .clearing import build_stochastic_extensive
    from .lp import solve

    lp = build_stochastic_extensive(case)
    x = solve(lp).primal
    m, n, r = lp.meta, lp.n_vars, lp.n_rows
    eps = 1e-7
    fl, fu = np.isfinite(lp.lb), np.isfinite(lp.ub)
    at_lb = fl & (np.abs(x - np.where(fl, lp.lb, 0.0)) <= eps * (1 + np.abs(np.where(fl, lp.lb, 0.0))))
    at_ub = fu & (np.abs(x - np.where(fu, lp.ub, 0.0)) <= eps * (1 + np.abs(np.where(fu, lp.ub, 0.0))))
    zb = [(None, None) if l and u else (0, None) if l else (None, 0) if u else (0, 0)
          for l, u in zip(at_lb, at_ub)]
    A_eq = sp.hstack([lp.A.T, sp.identity(n)]).tocsr()
    bounds = [(None, None)] * r + zb
    out = np.zeros((len(case.nodes), 2))
    for k in range(len(case.nodes)):
        c = np.zeros(r + n)
        c[m["balance"][k]] = 1.0
        c[m["rt_balance"][:, k]] -= 1.0
        lo = linprog(c, A_eq=A_eq, b_eq=lp.c, bounds=bounds, method="highs")
        hi = linprog(-c, A_eq=A_eq, b_eq=lp.c, bounds=bounds, method="highs")
        out[k] = lo.fun, -hi.fun
    return out
