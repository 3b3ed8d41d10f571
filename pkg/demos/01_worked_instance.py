# Two slices, the far one loaded with ten messages.
#
# Slice 1 (next to the sink) holds one message and ejects it at cost 1.
# Slice 2 holds ten; ejecting one costs d^2 = 4, sliding it down costs 1 here
# and 1 more at slice 1. The best split balances both slices.

import numpy as np

from sinkflow import NetworkSpec, compute_optimal

spec = NetworkSpec(b=[1, 1], d=[1, 2], g=[1, 10])
sol = compute_optimal(spec)

print("sliding probabilities:", sol.strategy.p)
print("slid F:", sol.flow.F, " ejected J:", sol.flow.J)
print("per-sensor energy:", sol.profile.e)
print("lifespan:", sol.profile.lifespan)

# By hand: E_1 = 1 + 10p and E_2 = 40 - 30p cross at p = 39/40.
p = np.linspace(0, 1, 401)
worst = np.maximum(1 + 10 * p, 40 - 30 * p)
print("grid minimum of the worst slice:", worst.min(), "at p =", p[worst.argmin()])
