import csv
import io
import json

import numpy as np
import pytest
from scipy.stats import norm

from mclear.clearing import clear
from mclear.io import (ParseError, SpecError, SplitMix64, UnsupportedField, builtin_system1,
                       builtin_system2, dump_case, dump_scenarios, generate_scenarios,
                       ieee118_case, load_case, load_matpower_subset, parse_case,
                       parse_scenarios, parse_spec, save_case, system2_line_failures,
                       write_comparison, write_report)
from mclear.io.builtin import SYSTEM2_FAILING
from mclear.io.report import build_tables, render_csv, render_json
from mclear.io.scenarios import clamped_normal
from mclear.metrics import compute_metrics, verify_theorems
from mclear.model import InvalidCase

from conftest import DATA

SHIPPED = DATA.parent.parent / "src" / "mclear" / "data" / "system1.case"


# --------------------------------------------------------------------------
# case files

def test_shipped_case_equals_builtin():
    assert load_case(SHIPPED) == builtin_system1()


def test_canonical_round_trip_is_byte_identical(tmp_path):
    text = SHIPPED.read_text()
    out = save_case(load_case(SHIPPED), tmp_path / "again.case")
    assert out.read_text() == text
    for case in (builtin_system2(), system2_line_failures()):
        t = dump_case(case)
        assert dump_case(parse_case(t)) == t
        assert parse_case(t) == case


def test_da_caps_section_round_trips(system1):
    from dataclasses import replace
    from mclear.model import DayAheadCaps
    case = replace(system1, da_caps=DayAheadCaps([90, 50, 90], [100], [25, 50]))
    t = dump_case(case)
    assert '"da_caps"' in t
    assert parse_case(t).da_caps == case.da_caps


def test_full_precision_numbers():
    t = SHIPPED.read_text().replace('"bid_da": 10.0', '"bid_da": 10.000000000000002')
    assert parse_case(t).generators[0].bid_da == 10.000000000000002


def test_negative_susceptance_is_invalid():
    t = SHIPPED.read_text().replace('"susceptance": 50.0', '"susceptance": -50.0', 1)
    with pytest.raises(InvalidCase):
        parse_case(t)


def test_unknown_key_reports_position():
    t = SHIPPED.read_text().replace('"installed_cap": 25.0}', '"installed_cap": 25.0, "x": 1}')
    with pytest.raises(ParseError) as exc:
        parse_case(t)
    assert exc.value.line == 11 and exc.value.column > 1


def test_syntax_error_reports_position():
    with pytest.raises(ParseError) as exc:
        parse_case('{\n  "format": "mclear-case",\n  "version": 1,,\n}')
    assert exc.value.line == 3


@pytest.mark.parametrize("old, new", [('"version": 1', '"version": 2'),
                                      ('"format": "mclear-case"', '"format": "other"'),
                                      ('"id": 1, "node": 1', '"id": 1.5, "node": 1')])
def test_header_and_type_errors(old, new):
    with pytest.raises(ParseError):
        parse_case(SHIPPED.read_text().replace(old, new, 1))


def test_scenario_section_round_trip(system2):
    t = dump_scenarios(system2.scenarios)
    assert parse_scenarios(t) == system2.scenarios
    assert "0.04" in t.splitlines()[1]


# --------------------------------------------------------------------------
# built-in systems

def test_system2_structure(system2):
    sc = system2.scenarios
    assert sc.count == 25 and np.allclose(sc.probabilities, 0.04)
    pairs = {(a, b) for a, b in sc.gen_cap[:, [1, 3]]}
    assert len(pairs) == 25
    assert {l.susceptance for l in system2.lines} == {50.0}
    ends = {(l.snd, l.rec) for l in system2.lines}
    assert set(SYSTEM2_FAILING) <= ends


def test_line_failure_variant():
    case = system2_line_failures()
    ids = {(l.snd, l.rec): k for k, l in enumerate(case.lines)}
    for ends in SYSTEM2_FAILING:
        assert (case.scenarios.line_cap[:, ids[ends]] == 0).sum() >= 5


# --------------------------------------------------------------------------
# MATPOWER

TWO_BUS = """function mpc = two
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0 0 0 0 1 1 0 135 1 1.05 0.95;
  2 1 80 0 0 0 1 1 0 135 1 1.05 0.95;
];
mpc.gen = [
  1 0 0 100 -100 1 100 1 150 0;
];
mpc.branch = [
  1 2 0.01 0.1 0 60 0 0 0 0 1 -360 360;
];
mpc.gencost = [
  2 0 0 3 0.01 20 0;
];
"""


def test_two_bus_file(tmp_path):
    p = tmp_path / "two.m"
    p.write_text(TWO_BUS)
    case = load_matpower_subset(p)
    assert len(case.nodes) == 2 and len(case.lines) == 1
    assert case.lines[0].susceptance == pytest.approx(1000.0)
    g, = case.generators
    assert (g.bid_da, g.inc_up, g.installed_cap) == (20.0, 2.0, 150.0)
    d, = case.demands
    assert d.node == 2 and d.installed_cap == 80.0


def test_unsupported_field_reports_line(tmp_path):
    p = tmp_path / "bad.m"
    p.write_text(TWO_BUS.replace("mpc.baseMVA = 100;", "mpc.baseMVA = 100;\nmpc.areas = [1 1];"))
    with pytest.raises(UnsupportedField) as exc:
        load_matpower_subset(p)
    assert exc.value.line == 4


def test_ragged_and_piecewise_rejected(tmp_path):
    p = tmp_path / "r.m"
    p.write_text(TWO_BUS.replace("2 1 80 0 0 0 1 1 0 135 1 1.05 0.95;", "2 1 80 0 0;"))
    with pytest.raises(ParseError):
        load_matpower_subset(p)
    p.write_text(TWO_BUS.replace("2 0 0 3 0.01 20 0;", "1 0 0 2 0 0 100 2000;"))
    with pytest.raises(UnsupportedField):
        load_matpower_subset(p)


def test_ieee118_counts():
    case = load_matpower_subset(DATA / "case118.m")
    assert len(case.nodes) == 118 and len(case.lines) == 186
    assert len(case.generators) == 54
    full = ieee118_case(DATA / "case118.m")
    assert len(full.generators) == 57 and full.scenarios.count == 25
    wind = full.scenarios.gen_cap[:, -3:]
    assert wind.min() >= 0 and wind.max() <= 300


# --------------------------------------------------------------------------
# scenarios

def test_splitmix64_reference_outputs():
    rng = SplitMix64(1234567)
    assert [rng.next_u64() for _ in range(5)] == [
        6457827717110365317, 3203168211198807973, 9817491932198370423,
        4593380528125082431, 16408922859458223821]


def clamped_mean(mu, sd, cap):
    """E[min(max(X, 0), cap)] for X ~ N(mu, sd^2)."""
    def call(k):  # E[(X - k)+]
        z = (mu - k) / sd
        return (mu - k) * norm.cdf(z) + sd * norm.pdf(z)
    return call(0.0) - call(cap)


@pytest.mark.parametrize("mu, sd, cap", [(300, 150, 300), (250, 50, 500), (10, 40, 60)])
def test_clamped_normal_matches_truncated_expectation(mu, sd, cap):
    x = clamped_normal(SplitMix64(99), mu, sd, cap, 10_000)
    assert x.min() >= 0 and x.max() <= cap
    assert abs(x.mean() - clamped_mean(mu, sd, cap)) <= 3 * sd / np.sqrt(10_000)


def test_generation_is_deterministic(system1):
    spec = parse_spec('{"version": 1, "count": 25, "seed": 7, "entities": ['
                      '{"kind": "gen", "id": 2, "dist": "normal", "mean": 50, "sd": 25}]}')
    a = generate_scenarios(spec, system1)
    b = generate_scenarios(spec, system1)
    assert a == b
    assert dump_scenarios(a) == dump_scenarios(b)
    assert generate_scenarios(spec, system1, seed=8) != a
    assert np.all(a.gen_cap[:, 0] == 100.0)  # untouched entities stay installed


def test_value_list_entities(system1):
    spec = parse_spec('{"count": 3, "entities": [{"kind": "dem", "id": 1, "dist": "values",'
                      ' "values": [100, 50, 25]}]}')
    sc = generate_scenarios(spec, system1)
    assert sc.dem_cap[:, 0].tolist() == [100, 50, 25]


@pytest.mark.parametrize("text", [
    '{"count": 0}',
    '{"count": 2, "entities": [{"kind": "gen", "id": 1, "dist": "normal", "sd": -1}]}',
    '{"count": 2, "entities": [{"kind": "gen", "id": 1, "dist": "values", "values": [1]}]}',
    '{"count": 2, "bogus": 1}',
    '{"count": 2, "entities": [{"kind": "bus", "id": 1, "dist": "normal"}]}',
    '[1, 2]',
    '{"count": 2,',
])
def test_bad_specs(text):
    with pytest.raises(SpecError):
        parse_spec(text)


def test_spec_entity_must_exist(system1):
    spec = parse_spec('{"count": 2, "entities": [{"kind": "gen", "id": 9, "dist": "normal"}]}')
    with pytest.raises(SpecError):
        generate_scenarios(spec, system1)


# --------------------------------------------------------------------------
# reports

def test_report_formats(tmp_path, s1_runs, system1):
    out = s1_runs["sto"]
    met = compute_metrics(out)
    rep = verify_theorems(system1, out)
    files = write_report(out, met, rep, "csv", tmp_path / "csv")
    assert [f.name for f in files] == ["prices.csv", "players.csv", "summary.csv", "theorems.csv"]
    raw = files[0].read_bytes()
    assert b"\r\n" in raw
    rows = list(csv.reader(io.StringIO(raw.decode())))
    assert rows[0] == ["node", "pi", "expected_Pi", "distortion"] and len(rows) == 4

    js, = write_report(out, met, rep, "json", tmp_path / "json")
    data = json.loads(js.read_text())
    assert [r["node"] for r in data["prices"]] == [1, 2, 3]
    for r, n in zip(data["prices"], met.distortion):
        assert float(f"{r['distortion']:.15g}") == float(f"{n:.15g}")
    assert data["summary"][0]["phi_g"] == pytest.approx(835, abs=1e-4)

    md, = write_report(out, met, None, "md", tmp_path / "md")
    text = md.read_text()
    assert "## prices" in text and "| node | pi |" in text and "theorems" not in text


def test_report_is_deterministic(tmp_path, s1_runs):
    out = s1_runs["det"]
    met = compute_metrics(out)
    a = write_report(out, met, None, "json", tmp_path / "a")[0].read_text()
    b = write_report(out, met, None, "json", tmp_path / "b")[0].read_text()
    assert a == b


def test_json_floats_carry_17_digits(s1_runs):
    out = s1_runs["sto"]
    tables = build_tables([(out, compute_metrics(out))])
    text = render_json(tables)
    parsed = json.loads(text)
    v = parsed["summary"][0]["phi_sto"]
    assert v == compute_metrics(out).phi_sto


def test_csv_quotes_fields_with_commas():
    from mclear.io.report import Table
    text = render_csv(Table("t", ("a", "b"), [("x,y", 1.5)]))
    assert text == 'a,b\r\n"x,y",1.5\r\n'


def test_comparison_rows(tmp_path, s1_runs):
    runs = [(s1_runs[m], compute_metrics(s1_runs[m])) for m in ("det", "sto", "ws")]
    f, = write_comparison(runs, "json", tmp_path)
    data = json.loads(f.read_text())
    assert [r["mode"] for r in data["summary"]] == ["det", "sto", "ws"]
    assert [r["phi_g"] for r in data["summary"]] == pytest.approx([835, 835, 800], abs=1e-4)
    assert data["phi_sto_minus_ws"] == pytest.approx(35, abs=1e-4)


def test_unknown_report_format(tmp_path, s1_runs):
    out = s1_runs["det"]
    with pytest.raises(ValueError):
        write_report(out, compute_metrics(out), None, "xlsx", tmp_path)


def test_ieee118_counts_clear_quickly():
    # only the deterministic model here; the stochastic run is in the acceptance suite
    case = ieee118_case(DATA / "case118.m", count=3)
    out = clear(case, "det")
    assert out.real_time.G.shape == (3, 57)
