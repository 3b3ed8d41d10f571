# A weak middle slice makes the balancing recurrence ask for a negative
# ejection probability. The optimizer caps the slide at the point where the
# weak slice stops ejecting, pins its probability to zero and carries on.

from sinkflow import NetworkSpec, epsilon_chain, run_optimizer, strategy_from_flow
from sinkflow.model import profile_from_flow

spec = NetworkSpec(b=[1, 0.1, 1], d=[1, 2, 3], g=[0, 0.9, 5])

print("unconstrained chain:", epsilon_chain(spec, 0).eps)

state = run_optimizer(spec)
print("final chain:        ", state.eps.eps, " clamped:", state.eps.clamped)
for c in state.clamps:
    print(f"  slice {c.slice} clamped while treating slice {c.current}; ejected there: {c.ejected_at_clamp}")

print("F:", state.flow.F)
print("J:", state.flow.J)
print("p:", strategy_from_flow(state.flow).p)
# the weak slice slides everything it gets (p = 1) and still sits on the peak
print("e:", profile_from_flow(state.flow, spec).e)
