#!/usr/bin/env python3
"""Walk through the three-branch step rule on hand-sized vectors.

The step is -gamma1*alpha*g when the gradient is small, the normalized
-alpha*g/||g|| when ||g|| falls inside [1/gamma1, 1/gamma2], and
-gamma2*alpha*g when it is large.  The normalized branch is exactly the
minimizer of the linear model g.p over the ball ||p|| <= alpha.
"""

import numpy as np

from trish import HyperParams, classify_case, trish_step

params = HyperParams(alpha=0.1, gamma1=4.0, gamma2=1.0)
print(f"alpha={params.alpha}, gamma1={params.gamma1}, gamma2={params.gamma2}")
print(f"normalized branch active for ||g|| in [{1/params.gamma1}, {1/params.gamma2}]\n")

for g in (np.array([0.1, 0.0]),      # small: scaled-up SG step
          np.array([0.6, 0.8]),      # norm 1.0: normalized step
          np.array([3.0, 4.0]),      # norm 5.0: scaled-down SG step
          np.array([0.0, 0.0])):     # zero gradient: zero step
    norm = np.linalg.norm(g)
    case = classify_case(norm, params.gamma1, params.gamma2)
    p = trish_step(g, params)
    print(f"g={g}  ||g||={norm:.2f}  {case.name}  p={p}  ||p||={np.linalg.norm(p):.4f}")

# The normalized step solves min g.p over ||p|| <= alpha: no random feasible
# point does better.
print("\nchecking the trust-region property of the middle branch:")
rng = np.random.default_rng(0)
g = np.array([0.6, 0.8])
p = trish_step(g, params)
best_random = min(
    float(g @ (params.alpha * q / np.linalg.norm(q)))
    for q in rng.normal(size=(10_000, 2)))
print(f"  g.p = {g @ p:.6f}, best of 10000 random boundary points = {best_random:.6f}")
assert g @ p <= best_random + 1e-12
print("  the normalized step is optimal, as expected")
