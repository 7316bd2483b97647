"""
Checking a candidate value function
===================================

The verifier applies the generator exactly to every closed-form piece and
checks the obstacle, the skew condition at z, continuity, smooth fit and
the tails.  A solution passes; nudging any single coefficient by one part in
a thousand does not.
"""

from skewgbm import SkewGbmParams, solve
from skewgbm.verify import standard_grid, verify

p = SkewGbmParams(r=0.1, b=0.05, sigma=0.3, K=1.0, z=1.6, beta=-0.5)
vf = solve(p)
rep = verify(vf)
print(vf.regime.value, "passed" if rep.passed else f"failed {rep.failures()}")
print("generator residual", rep.generator_residual, "skew residual", rep.skew_residual)

# %%
grid = standard_grid(vf)
for i, piece in enumerate(vf.pieces):
    for key in ("cn", "cm"):
        if getattr(piece, key) == 0.0:
            continue
        bad = verify(vf.replace_constant(i, key, 1.001), grid=grid)
        print(f"piece {i} {key} x 1.001 -> fails {bad.failures()}")
