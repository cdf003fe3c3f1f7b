"""Simulate two populations of curves and estimate their differential graph.

Uses the tri-block model with 30 nodes, where four edges change between the
populations. The estimate at each penalty is compared with the truth.
"""

from fundiff.diffgraph import threshold_edges
from fundiff.evalkit import fit_fudge
from fundiff.simgen import SimModelSpec, simulate

pair, X, Y = simulate(SimModelSpec("tri-block", 30, n=100, seed=1))
print("true differential edges:", sorted(pair.true_edges))

fitted = fit_fudge(X, Y, L=(10, 15, 20), M=(3, 4, 5), n_lambda=15)
print(f"selected L = {fitted.L}, M = {fitted.M}")
for est in fitted.path:
    found = threshold_edges(est)
    hits = len(found.edges & pair.true_edges.edges)
    print(f"lambda {est.lam:.4f}: {len(found):3d} edges, {hits} of {len(pair.true_edges)} true")
