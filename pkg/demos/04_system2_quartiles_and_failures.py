"""
Quantiles, value of the stochastic solution, line failures
==========================================================

Six-node network with two uncertain suppliers, uncertain load and 25
scenarios.  Asymmetric incremental bids move the day-ahead commitment of
each generator to a quantile of its real-time dispatch.  Then we knock out
one line per scenario and check that the operator stays revenue adequate.
"""
from mclear.clearing import clear, clear_stochastic
from mclear.io import builtin_system2, scale_generator_increments, system2_line_failures
from mclear.metrics import compute_metrics, quantile_level
from mclear.model import DiscreteDistribution, quantile

case = builtin_system2()
print(case.name, "-", len(case.nodes), "nodes,", len(case.lines), "lines,",
      case.scenarios.count, "scenarios")

# Expected total cost: perfect information <= stochastic <= deterministic.
cost = {m: compute_metrics(clear(case, m)).phi_sto for m in ("det", "sto", "ws")}
for m, v in cost.items():
    print(f"  {m:>3}: {v:14.4f}")
print(f"value of the stochastic solution: {cost['det'] - cost['sto']:.4f}")
print(f"expected value of perfect info:   {cost['sto'] - cost['ws']:.4f}")

# Quartiles: scale every generator's (up, down) increments.
print("\ngen  level   day-ahead g   quantile of G(w)")
for up, dn in ((0.5, 1.5), (1.0, 1.0), (1.5, 0.5)):
    c = scale_generator_increments(case, up, dn)
    out = clear_stochastic(c)
    for k, g in enumerate(c.generators):
        p = quantile_level(g.inc_up, g.inc_dn, "gen")
        q = quantile(DiscreteDistribution(out.probabilities, out.real_time.G[:, k]), p)
        print(f"{g.id:>3}  {p:5.2f}  {out.day_ahead.g[k]:12.4f}  {q:12.4f}")

# Line failures: each scenario loses one of five lines.
lf = system2_line_failures()
for m in ("det", "sto"):
    met = compute_metrics(clear(lf, m))
    print(f"\nline failures, {m}: M_ISO = {met.iso_revenue:.4f}, total uplift = {met.total_uplift:.4f}")
