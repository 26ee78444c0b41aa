"""
Exact posterior updates
=======================

The posterior over the qubit frequency stays a finite cosine series after
every measurement, so it can be updated and summarized without a grid.
"""
import numpy as np
from scipy.integrate import trapezoid

from fixedbasis import bayes_update, expected_posterior_variances, mean, uniform_prior, variance

##############################################################################
# Start flat on [0, 1] and record a few outcomes.
p = uniform_prior(1.0)
for m, r in [(1, +1), (1, -1), (2, +1), (1, +1), (3, -1)]:
    p = bayes_update(p, m, r)
    print(f"m={m} r={r:+d}  K={p.K:2d}  mean={mean(p):.4f}  var={variance(p):.5f}")

##############################################################################
# The density is a plain trigonometric sum; check it integrates to one.
w = np.linspace(0, 1, 2001)
print("integral:", trapezoid(p.density(w), w))

##############################################################################
# Which waiting multiple would shrink the variance most on average?
ev = expected_posterior_variances(p, 20)
best = int(np.argmin(ev)) + 1
print("expected variance by m:", np.round(ev[:8], 5))
print("greedy choice:", best)
