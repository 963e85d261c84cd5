"""
Distortion bounds and the incremental-bid sweep
===============================================

Stochastic clearing keeps day-ahead prices close to expected real-time
prices.  How close depends on the incremental bids and on the network
penalties.  Here we check the bounds on a solved case, look at the full
range of distortion over all optimal duals, and sweep the demand
increment on a variant with uncertain demand.
"""
import numpy as np

from mclear.clearing import clear_stochastic
from mclear.io import builtin_system1, system1_stochastic_demand
from mclear.metrics import bid_sweep, distortion_range, price_distortion, theorem_bounds, verify_theorems

case = builtin_system1()
out = clear_stochastic(case)

tb = theorem_bounds(case)
print("per-node bounds  -up <= M <= dn")
for n, up, dn, pu, pd in zip(case.nodes, tb.node_up, tb.node_dn, tb.player_up, tb.player_dn):
    print(f"  node {n.id}: up={up:.6g} dn={dn:.6g}   participants: up={pu:.6g} dn={pd:.6g}")

print("\nverify_theorems:")
print(verify_theorems(case, out))

# The extensive form has many optimal dual vectors.  Each node's distortion
# is linear in the duals, so its range over the optimal face is two LPs.
M = price_distortion(out).per_node
rng = distortion_range(case)
print("\nvertex distortion:", np.round(M, 6))
for n, (lo, hi) in zip(case.nodes, rng):
    print(f"  node {n.id}: optimal-dual range [{lo:.6f}, {hi:.6f}]")

# Sweep: uncertain demand, demand increments from 0.001 to 1.
print("\nbid sweep")
print(f"{'dinc':>8} {'M_max':>10} {'bound':>10} {'single-node':>12}")
for r in bid_sweep(system1_stochastic_demand(), [0.001, 0.01, 0.1, 1.0]):
    print(f"{r.demand_inc:8g} {r.M_max:10.6f} {r.bound:10.6f} {r.single_node_bound:12g}")
