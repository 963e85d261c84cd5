"""The two small benchmark systems and their study variants.

System I is fully specified.  System II leaves its line list and several
capacities open; the values chosen here are documented below and only the
qualitative behaviour (not exact table values) should be expected to match.
"""
from __future__ import annotations

from dataclasses import replace
from itertools import product

import numpy as np

from ..model import (Demand, Generator, Line, MarketCase, Node, PenaltyConfig, ScenarioSet,
                     validate_case)
from .scenarios import SplitMix64, clamped_normal

VOLL = 1000.0


def builtin_system1() -> MarketCase:
    """Three nodes in a chain, wind at the middle node, load at the middle node.

    Generators 1 and 3 are given 100 MW of installed capacity (enough to
    never bind); wind has 75 MW installed with realizations 25/50/75.
    """
    nodes = [Node(1), Node(2), Node(3)]
    lines = [Line(1, 1, 2, 50.0, 25.0), Line(2, 2, 3, 50.0, 50.0)]
    gens = [Generator(1, 1, 10.0, 1.0, 1.0, 100.0),
            Generator(2, 2, 1.0, 0.1, 0.1, 75.0),
            Generator(3, 3, 20.0, 2.0, 2.0, 100.0)]
    dems = [Demand(1, 2, VOLL, 0.001, 0.001, 100.0)]
    sc = ScenarioSet(np.full(3, 1 / 3),
                     [[100.0, 25.0, 100.0], [100.0, 50.0, 100.0], [100.0, 75.0, 100.0]],
                     [[100.0]] * 3,
                     [[25.0, 50.0]] * 3)
    return validate_case(MarketCase(nodes, lines, gens, dems, PenaltyConfig(), sc,
                                    name="system1"))


def system1_stochastic_demand(demand_inc: float = 0.001, wind_inc: float = 1.0) -> MarketCase:
    """System I with load {100, 50, 25} paired with wind {25, 50, 75}.

    Used for the incremental-bid sweep: the wind increment is raised to
    ``wind_inc`` and the demand increments set to ``demand_inc``.
    """
    base = builtin_system1()
    gens = [replace(g, inc_up=wind_inc, inc_dn=wind_inc) if g.id == 2 else g
            for g in base.generators]
    dems = [replace(d, inc_up=demand_inc, inc_dn=demand_inc) for d in base.demands]
    sc = base.scenarios
    sc = ScenarioSet(sc.probabilities, sc.gen_cap, [[100.0], [50.0], [25.0]], sc.line_cap)
    return validate_case(replace(base, generators=tuple(gens), demands=tuple(dems),
                                 scenarios=sc, name="system1-stochastic-demand",
                                 validated=False))


# --------------------------------------------------------------------------
# System II
#
# Assumed topology (B = 50 everywhere):
#   1->2 (100 MW), 2->3 (50), 2->6 (100), 3->6 (100), 4->6 (100), 5->6 (50)
# The first five are the lines named in the failure study; 5->6 is added so
# the node-5 supplier can reach the load.  Generators 1, 3, 5 have 100 MW
# installed; the stochastic suppliers at nodes 2 and 4 have 90 MW installed.
# Load at node 6 has 500 MW installed and realizations drawn from N(250, 50)
# with SplitMix64 seed SYSTEM2_SEED, clamped to [0, 500].  The 25 load draws
# are paired one-to-one with the 25 capacity permutations.

SYSTEM2_SEED = 20160
SYSTEM2_SUPPORT = (10.0, 20.0, 60.0, 70.0, 90.0)
SYSTEM2_FAILING = ((1, 2), (2, 6), (3, 6), (4, 6), (2, 3))


def system2_demand_samples(count: int = 25, seed: int = SYSTEM2_SEED) -> np.ndarray:
    return clamped_normal(SplitMix64(seed), 250.0, 50.0, 500.0, count)


def builtin_system2() -> MarketCase:
    nodes = [Node(n) for n in range(1, 7)]
    topo = [(1, 2, 100.0), (2, 3, 50.0), (2, 6, 100.0), (3, 6, 100.0), (4, 6, 100.0),
            (5, 6, 50.0)]
    lines = [Line(k + 1, s, r, 50.0, cap) for k, (s, r, cap) in enumerate(topo)]
    bids = (100.0, 1.0, 100.0, 1.0, 200.0)
    incs = (10.0, 0.1, 10.0, 0.1, 20.0)
    caps = (100.0, 90.0, 100.0, 90.0, 100.0)
    gens = [Generator(k + 1, k + 1, a, dlt, dlt, c) for k, (a, dlt, c) in
            enumerate(zip(bids, incs, caps))]
    dems = [Demand(1, 6, VOLL, 0.001, 0.001, 500.0)]
    perms = list(product(SYSTEM2_SUPPORT, repeat=2))
    gen_cap = np.array([[100.0, a, 100.0, b, 100.0] for a, b in perms])
    dem_cap = system2_demand_samples(len(perms))[:, None]
    line_cap = np.tile([l.installed_cap for l in lines], (len(perms), 1))
    sc = ScenarioSet(np.full(len(perms), 1.0 / len(perms)), gen_cap, dem_cap, line_cap)
    return validate_case(MarketCase(nodes, lines, gens, dems, PenaltyConfig(), sc,
                                    name="system2"))


def system2_line_failures() -> MarketCase:
    """System II where each named line is out (capacity 0) in five scenarios.

    Scenario ``w`` takes line ``w mod 5`` of the failure list out of service.
    """
    base = builtin_system2()
    line_cap = np.array(base.scenarios.line_cap)
    ids = {(l.snd, l.rec): k for k, l in enumerate(base.lines)}
    for w in range(line_cap.shape[0]):
        line_cap[w, ids[SYSTEM2_FAILING[w % len(SYSTEM2_FAILING)]]] = 0.0
    sc = base.scenarios
    return validate_case(replace(base, scenarios=ScenarioSet(sc.probabilities, sc.gen_cap,
                                                             sc.dem_cap, line_cap),
                                 name="system2-line-failures", validated=False))


def scale_generator_increments(case: MarketCase, up: float, dn: float) -> MarketCase:
    """Copy of ``case`` with every generator's increments multiplied by (up, dn)."""
    gens = [replace(g, inc_up=g.inc_up * up, inc_dn=g.inc_dn * dn) for g in case.generators]
    return validate_case(replace(case, generators=tuple(gens), validated=False))


BUILTINS = {
    "system1": builtin_system1,
    "system1-stochastic-demand": system1_stochastic_demand,
    "system2": builtin_system2,
    "system2-line-failures": system2_line_failures,
}
