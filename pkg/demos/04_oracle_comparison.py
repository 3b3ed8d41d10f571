# Cross-check the optimizer against exhaustive grid search on small networks.
#
# The grid only visits strategies on a lattice, so it can never beat the exact
# optimum; its gap to the optimum is bounded by a Lipschitz slack.

import time

import numpy as np

from sinkflow import NetworkSpec, brute_force_oracle, compute_optimal

rng = np.random.default_rng(1)
print(f"{'n':>2} {'optimizer':>12} {'grid':>12} {'gap':>10} {'slack':>10}")
t0 = time.perf_counter()
for _ in range(12):
    n = int(rng.integers(2, 5))
    spec = NetworkSpec(rng.uniform(0.05, 5, n), np.sort(rng.uniform(1, 10, n)), rng.uniform(0, 20, n))
    sol = compute_optimal(spec)
    grid = brute_force_oracle(spec, step=0.01)
    slack = grid.lifespan_slack(sol.profile.max_energy)
    gap = sol.profile.lifespan - grid.lifespan
    print(f"{n:>2} {sol.profile.lifespan:>12.6g} {grid.lifespan:>12.6g} {gap:>10.2e} {slack:>10.2e}")
print(f"{time.perf_counter() - t0:.1f} s")
