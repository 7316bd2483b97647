"""
Classifying parameters and pricing the perpetual call
=====================================================

A perpetual American call on a geometric Brownian motion whose log has a
skew point at level z.  The sign and size of the skew parameter beta decide
which of four cases applies, and the case decides how the critical points
are ordered.
"""

import numpy as np

from skewgbm import SkewGbmParams, classify, solve

# reference market: rate 10%, drift 5%, volatility 30%, strike 1
p = SkewGbmParams(r=0.1, b=0.05, sigma=0.3, K=1.0, z=1.0, beta=-0.1)
prof = classify(p)
print("case", prof.case.value)
print("roots m, n:", prof.m, prof.n)
print("critical points:", {k: round(v, 6) for k, v in prof.to_dict().items() if k in ("zc", "zbeta", "z0")})

# %%
# The value function is a closed form, assembled piece by piece.
vf = solve(p)
print("regime", vf.regime.value)
print("stopping region", vf.region.components)

x = np.array([0.5, 1.0, 2.0, 3.0, 4.0])
for xi, v, stop in zip(x, vf.evaluate(x), vf.is_stopping(x)):
    print(f"x = {xi:4.1f}  v = {v:.6f}  payoff = {max(xi - 1, 0):.2f}  {'stop' if stop else 'wait'}")

# %%
# At the skew point the value function has a kink: the left and right
# slopes differ by the factor (1 - beta) / (1 + beta).
print("slopes at z:", vf.d_left(1.0), vf.d_right(1.0), "ratio", vf.d_right(1.0) / vf.d_left(1.0))
print("expected ratio", (1 - p.beta) / (1 + p.beta))
