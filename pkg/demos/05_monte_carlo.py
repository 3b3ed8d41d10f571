# Simulate individual messages walking toward the sink and compare the
# average energy per sensor with the analytic prediction.

from sinkflow import (
    Configuration,
    NetworkSpec,
    SimConfig,
    Strategy,
    compare,
    compute_optimal,
    evaluate_strategy,
    simulate,
)

spec = NetworkSpec(b=[1, 1], d=[1, 2], g=[1, 10])
strategy = compute_optimal(spec).strategy
_, analytic = evaluate_strategy(Configuration(spec, strategy))

cfg = SimConfig(replications=100_000, seed=0)
sim = simulate(spec, strategy, cfg)
result = compare(analytic, sim, cfg)
for i, a, s, se, z in result.rows(analytic, sim):
    print(f"slice {i + 1}: analytic {a:.4f}  simulated {s:.4f} +- {se:.4f}  z = {z:+.2f}")

# A clearly wrong sliding probability is caught at once.
wrong = simulate(spec, Strategy([0, 0.5]), cfg)
print("perturbed strategy passes?", compare(analytic, wrong, cfg).passed)
