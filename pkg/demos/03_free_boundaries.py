"""
Free boundaries as functions of the skew level
==============================================

Each regime comes with its own boundary equation.  This walks through them
for the reference market and shows the thresholds where the regime changes.
"""

import numpy as np

from skewgbm import SkewGbmParams, classify
from skewgbm import boundary as fb

base = dict(r=0.1, b=0.05, sigma=0.3, K=1.0)

# %%
# Moderate negative skew: one boundary alpha(z), falling from z0 towards
# zbeta as z rises.  Beyond zbeta the holder stops at z itself.
prof = classify(SkewGbmParams(beta=-0.1, z=1.0, **base))
for z in np.linspace(0.2, 0.99 * prof.zbeta, 6):
    print(f"z = {z:.3f}   alpha = {fb.alpha(z, prof):.6f}")
print("zbeta", prof.zbeta, "z0", prof.z0)

# %%
# Strong negative skew: below z_minus the single boundary survives; between
# z_minus and zc the point z is itself a stopping point, with a ray from xi.
prof = classify(SkewGbmParams(beta=-0.5, z=1.0, **base))
zm = fb.z_minus(prof)
print("z_minus", zm, "zc", prof.zc)
for z in np.linspace(zm, 0.99 * prof.zc, 5):
    print(f"z = {z:.3f}   xi = {fb.xi(z, prof):.6f}")
print("at z_minus: xi =", fb.xi(zm, prof), "alpha =", fb.alpha(zm, prof))

# %%
# Positive skew: above z_plus a continuation gap opens around z, splitting
# the stopping region into [z0, gamma] and [zeta, infinity).
prof = classify(SkewGbmParams(beta=0.3, z=1.0, **base))
zp = fb.z_plus(prof)
print("z_plus", zp)
for z in (0.999 * zp, 1.001 * zp, 1.3 * zp, 2 * zp):
    pair = fb.gamma_zeta(z, prof)
    print(f"z = {z:.4f}  ", "no gap" if pair is None else f"gamma = {pair.gamma:.6f}, zeta = {pair.zeta:.6f}")
