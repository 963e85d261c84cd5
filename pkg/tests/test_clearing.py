import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mclear.clearing import (InfeasibleRecourse, build_stochastic_extensive, clear,
                             clear_deterministic, clear_stochastic, clear_wait_and_see,
                             summarize_capacities)
from mclear.io import builtin_system1, scale_generator_increments
from mclear.lp import SolverOptions
from mclear.metrics import price_distortion, theorem_bounds
from mclear.model import DiscreteDistribution, Generator, ScenarioSet, median, validate_case

from tests_support import angle_locked_case

TOL = 1e-6


def test_system1_first_stage_is_the_same_in_every_mode(s1_runs):
    for mode in ("det", "sto"):
        assert s1_runs[mode].day_ahead.g == pytest.approx([25, 50, 25], abs=TOL)
        assert s1_runs[mode].day_ahead.d == pytest.approx([100], abs=TOL)


def test_system1_deterministic_realtime_rows(s1_runs):
    G = s1_runs["det"].real_time.G
    assert G == pytest.approx(np.array([[25, 25, 50], [25, 50, 25], [25, 75, 0]]), abs=TOL)
    assert s1_runs["det"].day_ahead.pi == pytest.approx([10, 20, 20], abs=TOL)


def test_system1_wait_and_see_dispatch(s1_runs):
    ws = s1_runs["ws"]
    assert ws.day_ahead.g == pytest.approx(np.array([[25, 25, 50], [25, 50, 25], [25, 75, 0]]),
                                           abs=TOL)
    assert np.array_equal(ws.real_time.G, ws.day_ahead.g)


def test_deterministic_mean_capacity_for_wind(system1):
    caps = summarize_capacities(system1, "mean")
    assert caps.g[1] == pytest.approx(50.0)
    assert summarize_capacities(system1, "max").g[1] == 75.0
    assert summarize_capacities(system1, "median").g[1] == 50.0
    with pytest.raises(ValueError):
        summarize_capacities(system1, "mode")


def test_stochastic_flows_are_realtime_medians(s1_runs):
    sto = s1_runs["sto"]
    F = s1_runs["det"].real_time.F
    meds = [median(DiscreteDistribution(sto.probabilities, F[:, k])) for k in range(2)]
    assert sto.day_ahead.f == pytest.approx(meds, abs=TOL)
    assert np.abs(sto.day_ahead.f) == pytest.approx([25, 25], abs=TOL)


def test_realtime_price_at_node1_depends_on_dual_choice(system1):
    """Expected real-time price at node 1 is not pinned down by the primal.

    The recourse LPs are degenerate: any E[Pi_1] in [9, 11] is optimal.  Two
    solvers land on different ends, while the primal is identical.
    """
    own = clear_deterministic(system1, opts=SolverOptions(method="simplex"))
    other = clear_deterministic(system1, opts=SolverOptions(method="highs"))
    p = own.probabilities
    for out in (own, other):
        assert 9 - TOL <= p @ out.real_time.Pi[:, 0] <= 11 + TOL
    assert own.real_time.G == pytest.approx(other.real_time.G, abs=TOL)
    assert own.objective == pytest.approx(other.objective, abs=1e-6)


def test_modes_order_by_expected_cost(system2):
    obj = {m: clear(system2, m).objective for m in ("det", "sto", "ws")}
    assert obj["ws"] <= obj["sto"] + 1e-6 <= obj["det"] + 2e-6


def test_wait_and_see_equals_per_scenario_deterministic(system1):
    ws = clear_wait_and_see(system1)
    for w in range(system1.scenarios.count):
        sc = system1.scenarios.subset(w)
        det = clear_deterministic(system1.with_scenarios(sc))
        assert det.day_ahead.g == pytest.approx(ws.day_ahead.g[w], abs=TOL)


def test_extensive_form_layout(system1):
    lp = build_stochastic_extensive(system1)
    m = lp.meta
    S = system1.scenarios.count
    assert m["G"].shape == (S, 3) and m["rt_balance"].shape == (S, 3)
    assert m["pairs"].shape == (S, 3 + 1 + 2 + 3, 2)
    assert np.isinf(lp.lb[m["g"]]).all() and np.isinf(lp.ub[m["g"]]).all()


def test_stochastic_prices_are_rescaled_duals(s1_runs):
    sto = s1_runs["sto"]
    raw = sto.extras["rt_balance_duals"]
    assert sto.real_time.Pi == pytest.approx(raw / sto.probabilities[:, None])


def test_infeasible_recourse_names_the_scenario():
    with pytest.raises(InfeasibleRecourse) as exc:
        clear_deterministic(angle_locked_case())
    assert exc.value.scenario == 1


def test_thread_count_does_not_change_results(system1, monkeypatch):
    monkeypatch.setenv("MCLEAR_THREADS", "1")
    a = clear_deterministic(system1)
    monkeypatch.setenv("MCLEAR_THREADS", "4")
    b = clear_deterministic(system1)
    assert np.array_equal(a.real_time.Pi, b.real_time.Pi)
    assert np.array_equal(a.real_time.G, b.real_time.G)


def test_unknown_mode(system1):
    with pytest.raises(ValueError):
        clear(system1, "robust")


def test_meshed_first_stage_flow_can_leave_realtime_range(system2):
    """With (1.5, 0.5) increments the first-stage flow on line 2->6 exceeds
    every real-time flow on that line, while g and d stay inside their
    real-time ranges."""
    case = scale_generator_increments(system2, 1.5, 0.5)
    out = clear_stochastic(case)
    da, rt = out.day_ahead, out.real_time
    assert rt.G.min(0).min() >= 0
    assert np.all(da.g >= rt.G.min(0) - TOL) and np.all(da.g <= rt.G.max(0) + TOL)
    assert np.all(da.d >= rt.D.min(0) - TOL) and np.all(da.d <= rt.D.max(0) + TOL)
    k = [l.id for l in case.lines].index(3)  # 2 -> 6
    assert da.f[k] > rt.F[:, k].max() + 1.0


@settings(max_examples=25)
@given(st.lists(st.floats(0, 75), min_size=2, max_size=4),
       st.floats(0.01, 3.0), st.floats(0.01, 3.0), st.floats(1, 30))
def test_quantity_leaves_realtime_range_only_at_saturated_distortion(wind, up, dn, alpha3):
    """A first-stage g or d outside the range of its real-time quantities
    forces every deviation pair to one side, which pins the node's
    distortion to a participant bound.  Interior distortion therefore
    implies the quantity bound."""
    base = builtin_system1()
    S = len(wind)
    gens = list(base.generators)
    gens[1] = Generator(2, 2, 1.0, up, dn, 75.0)
    gens[2] = Generator(3, 3, alpha3, 2.0, 2.0, 100.0)
    sc = ScenarioSet(np.full(S, 1 / S), [[100.0, w, 100.0] for w in wind], [[100.0]] * S,
                     [[25.0, 50.0]] * S)
    case = validate_case(base.with_generators(gens).with_scenarios(sc))
    out = clear_stochastic(case)
    da, rt = out.day_ahead, out.real_time
    M = price_distortion(out).per_node
    tb = theorem_bounds(case)
    for x, X, nodes in ((da.g, rt.G, case.gen_nodes()), (da.d, rt.D, case.dem_nodes())):
        outside = (x < X.min(0) - TOL) | (x > X.max(0) + TOL)
        for k in np.flatnonzero(outside):
            n = nodes[k]
            at_bound = min(abs(M[n] + tb.player_up[n]), abs(M[n] - tb.player_dn[n]))
            assert at_bound <= 1e-7, (k, x[k], M[n])


def test_radial_counterexample_demand_below_every_realtime_quantity():
    base = builtin_system1()
    gens = list(base.generators)
    gens[1] = Generator(2, 2, 1.0, 1.0, 3.0, 75.0)
    gens[2] = Generator(3, 3, 1.0, 2.0, 2.0, 100.0)
    sc = ScenarioSet(np.full(3, 1 / 3), [[100.0, w, 100.0] for w in (0.0, 26.0, 26.0)],
                     [[100.0]] * 3, [[25.0, 50.0]] * 3)
    out = clear_stochastic(validate_case(base.with_generators(gens).with_scenarios(sc)))
    assert out.day_ahead.d[0] == pytest.approx(74.0, abs=TOL)
    assert out.real_time.D.min() == pytest.approx(75.0, abs=TOL)
    assert price_distortion(out).per_node[1] == pytest.approx(0.001, abs=1e-9)
