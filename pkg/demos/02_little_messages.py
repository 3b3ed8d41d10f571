# When the far slice has too few messages to catch up.
#
# Slice 1 already spends 10 ejecting its own traffic. Slice 2 has a single
# message: even ejecting it (cost 4) leaves slice 2 below slice 1, and sliding
# would only add to slice 1. The optimizer opens a catch-up level and ejects.

from sinkflow import Configuration, NetworkSpec, check_tabletop_optimality, run_optimizer, strategy_from_flow

spec = NetworkSpec(b=[1, 1], d=[1, 2], g=[10, 1])
state = run_optimizer(spec, trace=True)
for event in state.trace:
    print(*event)

strategy = strategy_from_flow(state.flow)
print("p =", strategy.p, " catch-up levels opened at slices", state.descents)

report = check_tabletop_optimality(Configuration(spec, strategy))
print("peak", report.max_value, "at slice", report.k, "-> optimal:", report.optimal)
print("left condition (nothing flows into the peak from above):", report.left_condition)
