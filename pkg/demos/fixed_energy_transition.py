"""The jump-count phase transition without dissipation.

Seed mu*n particles, let the no-sink dynamics run until mu*n of them
sleep, and count the steps J.  Below the critical density p the count is
linear in n; at the critical density it scales like (1/2) n log n; above
it the time explodes (every run here hits its cap).
"""

import math

import numpy as np

from arwlab import bup
from arwlab.rng import derive_seed

n, p, reps = 3000, 0.5, 20
cap = round(100 * n * math.log(n))

for mu in (0.4, 0.5, 0.6):
    steps, capped = [], 0
    for i in range(reps):
        res = bup.run_fixed_energy(n, p, math.ceil(mu * n),
                                   rng=derive_seed(6626, i), step_cap=cap)
        steps.append(res.steps)
        capped += res.cap_hit
    med = np.median(steps)
    print(f"mu={mu}: median J = {med:>12.0f}"
          f"   J/n = {med / n:8.1f}   J/(n log n) = {med / (n * math.log(n)):6.3f}"
          f"   capped {capped}/{reps}")

print(f"\n(cap = {cap} steps = 100 n log n; above the critical density the")
print("true stabilization time is exponentially long, so every run caps out)")
