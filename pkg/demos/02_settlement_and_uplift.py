"""
Who gets paid, and who needs an uplift
======================================

Settles the two-stage market for every participant: day-ahead payment at
pi plus real-time corrections at Pi(w), against the cost implied by their
bids.  A shortfall is covered by an uplift.  The operator's expected net
revenue is M_ISO.
"""
import numpy as np

from mclear.clearing import clear
from mclear.io import builtin_system1
from mclear.metrics import compute_metrics

case = builtin_system1()

for mode in ("det", "sto"):
    out = clear(case, mode)
    met = compute_metrics(out)
    cf = met.cashflows
    print(f"\n=== {mode} ===")
    print(f"{'player':>8} {'E[cost]':>12} {'E[payment]':>12} {'uplift':>10}")
    for g, c, p, u in zip(case.generators, cf.EC_g, cf.EP_g, cf.uplift_g):
        print(f"{'gen ' + str(g.id):>8} {c:12.4f} {p:12.4f} {u:10.4f}")
    for d, c, p, u in zip(case.demands, cf.EC_d, cf.EP_d, cf.uplift_d):
        print(f"{'dem ' + str(d.id):>8} {c:12.4f} {p:12.4f} {u:10.4f}")
    print(f"total uplift = {met.total_uplift:.4f}")
    print(f"M_ISO        = {met.iso_revenue:.4f}")

# Under det the wind farm sells 50 MW day-ahead but must buy back 25 MW at
# the scarcity price when wind is low: its expected payment is negative.
# Under sto every player recovers its bid cost and the operator does not
# run a deficit.

# The payment identity: E[P] = pi*x + E[Pi(w)*(X(w) - x)], per supplier.
out = clear(case, "det")
met = compute_metrics(out)
p = out.probabilities
lhs = met.cashflows.EP_g
g, G = out.day_ahead.g, out.real_time.G
pi, Pi = out.day_ahead.pi, out.real_time.Pi
nodes = case.gen_nodes()
rhs = pi[nodes] * g + p @ (Pi[:, nodes] * (G - g))
print("\npayment identity residual:", np.abs(lhs - rhs).max())
