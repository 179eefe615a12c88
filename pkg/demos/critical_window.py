"""Where the stationary sleeping count concentrates.

With sink strength q = 1/(n+1) the count S settles near
p*n + sqrt(p(1-p) n log n): above the naive mean p*n by a log-sized
fluctuation term.  We draw replicates and print how many land inside the
half-width window, plus a crude text histogram.
"""

import numpy as np

from arwlab import bup
from arwlab.model import Params, constants
from arwlab.rng import derive_seed

n, p = 4000, 0.5
params = Params(n=n, p=p, q=1.0 / (n + 1))
alpha = constants(params).alpha_n
reps = 400

values = np.array(
    [bup.run_to_hitting(params, rng=derive_seed(31415, i)).y for i in range(reps)]
)
center = p * n + alpha
inside = np.mean(np.abs(values - center) <= 0.5 * alpha)

print(f"n={n}: pn={p * n:.0f}, fluctuation scale alpha={alpha:.1f}")
print(f"predicted center pn + alpha = {center:.1f}")
print(f"sample mean = {values.mean():.1f}, sample sd = {values.std(ddof=1):.1f}")
print(f"fraction within half an alpha of the center: {inside:.2%}\n")

lo, hi = values.min(), values.max()
bins = np.linspace(lo, hi + 1, 24)
hist, _ = np.histogram(values, bins)
for count, left in zip(hist, bins):
    bar = "#" * int(60 * count / hist.max())
    marker = " <- pn+alpha" if left <= center < left + (bins[1] - bins[0]) else ""
    print(f"  {left:7.0f} | {bar}{marker}")
