"""
Nine qualitative regimes
========================

Varying beta and the skew level z over the reference market produces every
shape of stopping region the model allows: a single ray starting at a free
boundary, at z itself, or at the classical-looking threshold z0; an isolated
point plus a ray; and two disjoint intervals.
"""

import numpy as np

from skewgbm import SkewGbmParams, solve

base = dict(r=0.1, b=0.05, sigma=0.3, K=1.0)
atlas = [(-0.1, 1.0), (-0.1, 2.8), (-0.1, 4.5), (-0.5, 0.9), (-0.5, 2.5),
         (-0.5, 4.5), (0.3, 2.0), (-0.5, 1.6), (0.3, 7.25)]

curves = []
for beta, z in atlas:
    vf = solve(SkewGbmParams(beta=beta, z=z, **base))
    comps = ", ".join(f"[{lo:.4f}, {hi:.4f}]" for lo, hi in vf.region.components)
    print(f"beta={beta:+.1f} z={z:<5} {vf.regime.value:14s} stop on {comps}")
    curves.append(vf)

# %%
# Optional picture: value against payoff for each regime.
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, axes = plt.subplots(3, 3, figsize=(11, 9))
    for ax, vf in zip(axes.flat, curves):
        right = 1.3 * max(b for b in vf.breakpoints if np.isfinite(b))
        x = np.linspace(0.01, right, 600)
        ax.plot(x, vf.evaluate(x), label="value")
        ax.plot(x, np.maximum(x - 1.0, 0), "--", label="payoff")
        ax.axvline(vf.params.z, color="grey", lw=0.5)
        ax.set_title(f"{vf.regime.value} (beta={vf.params.beta}, z={vf.params.z})", fontsize=9)
    axes[0, 0].legend()
    fig.tight_layout()
    fig.savefig("regime_atlas.png", dpi=110)
    print("wrote regime_atlas.png")
