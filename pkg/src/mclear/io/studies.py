"""Assembly of the larger study cases from ingested data."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..model import Generator, MarketCase, ScenarioSet, validate_case
from .matpower import load_matpower_subset
from .scenarios import EntitySpec, ScenarioSpec, generate_scenarios

IEEE118_WIND_BUSES = (10, 65, 112)
IEEE118_SEED = 118


def add_suppliers(case: MarketCase, buses, installed_cap: float, bid: float,
                  inc: float) -> tuple[MarketCase, list[int]]:
    """Append one generator per bus; returns the new case and the new ids."""
    start = max((g.id for g in case.generators), default=0) + 1
    new = [Generator(start + k, b, bid, inc, inc, installed_cap) for k, b in enumerate(buses)]
    sc = case.scenarios
    gen_cap = np.hstack([sc.gen_cap, np.full((sc.count, len(new)), installed_cap)])
    sc = ScenarioSet(sc.probabilities, gen_cap, sc.dem_cap, sc.line_cap)
    out = replace(case, generators=case.generators + tuple(new), scenarios=sc, validated=False)
    return validate_case(out), [g.id for g in new]


def ieee118_case(path, count: int = 25, seed: int = IEEE118_SEED, wind_cap: float = 300.0,
                 wind_mean: float = 300.0, wind_sd: float = 150.0, wind_bid: float = 1.0,
                 wind_inc: float = 0.1) -> MarketCase:
    """IEEE-118 network with three uncertain suppliers drawn from a clamped normal.

    Wind bids (``wind_bid`` with increment ``wind_inc``) are an assumption:
    the source data gives no price for these units.
    """
    base = load_matpower_subset(path)
    case, ids = add_suppliers(base, IEEE118_WIND_BUSES, wind_cap, wind_bid, wind_inc)
    spec = ScenarioSpec(tuple(EntitySpec("gen", i, "normal", wind_mean, wind_sd) for i in ids),
                        count, seed)
    return validate_case(replace(case.with_scenarios(generate_scenarios(spec, case)),
                                 name="ieee118-wind"))
