"""Grid-based check of the variational inequality for a candidate solution.

The generator  sigma^2 x^2 w'' / 2 + b x w' - r w  is applied exactly to
each closed-form piece: on a power piece it is the sum of the two
characteristic polynomials times the monomials, on an affine piece it is
b x - r (x - K).  Nothing is differenced numerically here.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import CaseMismatch, DomainError
from .model import Case, classify
from .roots import DEFAULT, RootConfig
from .special import phi, psi
from .value import AFFINE, PiecewiseValueFunction, solve


@dataclass(frozen=True)
class GridConfig:
    nodes: int = 4096
    lo_factor: float = 1e-3  # left end, multiple of K
    hi_factor: float = 10.0  # right end, multiple of the rightmost breakpoint
    tol_gen: float = 1e-8  # relative to r w
    tol_obs: float = 1e-10  # multiple of K
    tol_cont: float = 1e-9  # multiple of K
    tol_fit: float = 1e-9  # derivative jumps away from z
    tol_skew: float = 1e-10

    def __post_init__(self):
        if self.nodes < 2:
            raise DomainError("the grid needs at least two nodes")
        if not 0 < self.lo_factor < 1 < self.hi_factor:
            raise DomainError("need 0 < lo_factor < 1 < hi_factor")


def standard_grid(vf: PiecewiseValueFunction, cfg: GridConfig = GridConfig(), extra=()) -> np.ndarray:
    """Geometric grid with every breakpoint and z inserted exactly."""
    p = vf.params
    right = max([p.z, classify(p).z0, *vf.breakpoints, *extra])
    grid = np.geomspace(cfg.lo_factor * p.K, cfg.hi_factor * right, cfg.nodes)
    return np.unique(np.concatenate([grid, vf.breakpoints, [p.z]]))


def _char_poly(k, params):
    return 0.5 * params.sigma ** 2 * k * (k - 1) + params.b * k - params.r


def generator(piece, x, shape_params, params):
    """Generator of ``params`` applied to ``piece`` (whose exponents come from
    ``shape_params``) at the points ``x``."""
    if piece.kind == AFFINE:
        return params.b * x - params.r * (x - params.K)
    m, n = shape_params.m, shape_params.n
    return piece.cn * _char_poly(n, params) * np.exp(n * np.log(x)) + piece.cm * _char_poly(
        m, params
    ) * np.exp(m * np.log(x))


@dataclass
class VerificationReport:
    obstacle_violation: float
    generator_residual: float  # continuation pieces, relative to r w
    stopping_generator_max: float  # stopping pieces, relative to r w
    skew_residual: float  # (1 + beta) w'(z+) - (1 - beta) w'(z-)
    z_is_stopping: bool
    continuity_defect: float
    kink_excess: float  # worst VI violation of derivative jumps away from z
    smooth_fit_defect: float  # |w'(x+) - w'(x-)| at stopping boundaries other than z
    region_defect: float  # |w - (x - K)| on the stopping region
    min_value: float
    tail_lower: float  # w / phi at the left end of the grid
    tail_upper: float  # w / psi at the right end of the grid
    grid_nodes: int
    passes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.passes.values())

    def failures(self) -> list[str]:
        return [name for name, ok in self.passes.items() if not ok]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def verify(vf: PiecewiseValueFunction, params=None, grid_cfg: GridConfig = GridConfig(),
           grid=None) -> VerificationReport:
    """Residuals of  max{L w, (x - K)^+ - w} = 0  and the skew condition at z.

    ``grid`` overrides the standard grid, for example to check a perturbed
    candidate on the nodes used for the original.  Breakpoint checks use the
    candidate's own pieces either way.
    """
    params = vf.params if params is None else params
    shape = vf.params
    K, z, beta, r = params.K, params.z, params.beta, params.r
    cfg = grid_cfg
    x = standard_grid(vf, cfg) if grid is None else np.unique(np.asarray(grid, dtype=float))

    w = vf.evaluate(x)
    payoff = np.maximum(x - K, 0.0)
    obstacle = float(np.max(payoff - w))
    min_value = float(np.min(w))

    # generator, one piece at a time on its closed interval
    gen_cont = 0.0
    gen_stop = -math.inf
    for piece in vf.pieces:
        hi = piece.hi if math.isfinite(piece.hi) else math.inf
        sel = x[(x >= piece.lo) & (x <= hi)]
        if sel.size == 0:
            continue
        val = piece.value(sel, shape)
        rel = generator(piece, sel, shape, params) / (r * np.maximum(np.abs(val), 1e-300))
        if piece.kind == AFFINE:
            gen_stop = max(gen_stop, float(np.max(rel)))
        else:
            gen_cont = max(gen_cont, float(np.max(np.abs(rel))))

    # behaviour at the breakpoints
    cont_defect = 0.0
    kink_excess = 0.0
    fit_defect = 0.0
    pieces = vf.pieces
    for left, right in zip(pieces, pieces[1:]):
        bp = left.hi
        wl, wr = float(left.value(bp, shape)), float(right.value(bp, shape))
        cont_defect = max(cont_defect, abs(wr - wl))
        if bp == z:
            continue
        kink = float(right.d1(bp, shape) - left.d1(bp, shape))
        if vf.is_stopping(bp):
            # a downward kink is admissible where w touches the payoff
            kink_excess = max(kink_excess, kink)
            fit_defect = max(fit_defect, abs(kink))
        else:
            kink_excess = max(kink_excess, abs(kink))

    # skew condition
    z_stop = bool(vf.is_stopping(z))
    skew = (1 + beta) * float(vf.d_right(z)) - (1 - beta) * float(vf.d_left(z))
    skew_scale = max(1.0, abs(float(vf.d_left(z))), abs(float(vf.d_right(z))))

    # the value equals the payoff on every stopping component
    region_defect = 0.0
    for lo, hi in vf.region.components:
        pts = x[(x >= lo) & (x <= hi)]
        pts = np.concatenate([pts, [lo]])
        region_defect = max(region_defect, float(np.max(np.abs(vf.evaluate(pts) - (pts - K)))))

    x_lo, x_hi = x[0], x[-1]
    tail_lower = float(vf.evaluate(x_lo) / phi(x_lo, z, params))
    tail_upper = float(vf.evaluate(x_hi) / psi(x_hi, z, params))
    # the ratios must still be shrinking towards the ends
    tail_lower_in = float(vf.evaluate(10 * x_lo) / phi(10 * x_lo, z, params))
    tail_upper_in = float(vf.evaluate(x_hi / 10) / psi(x_hi / 10, z, params))

    tol_skew = cfg.tol_skew * skew_scale
    passes = {
        "obstacle": obstacle <= cfg.tol_obs * K,
        "positivity": min_value > 0,
        "generator_continuation": gen_cont <= cfg.tol_gen,
        "generator_stopping": gen_stop <= cfg.tol_gen,
        "skew_condition": (skew <= tol_skew) if z_stop else (abs(skew) <= tol_skew),
        "continuity": cont_defect <= cfg.tol_cont * K,
        "kink_measure": kink_excess <= cfg.tol_fit,
        "smooth_fit": fit_defect <= cfg.tol_fit,
        "stopping_region": region_defect <= cfg.tol_obs * K,
        "tail_limits": tail_lower < tail_lower_in and tail_upper < tail_upper_in,
    }
    return VerificationReport(
        obstacle_violation=obstacle,
        generator_residual=gen_cont,
        stopping_generator_max=gen_stop if math.isfinite(gen_stop) else 0.0,
        skew_residual=skew,
        z_is_stopping=z_stop,
        continuity_defect=cont_defect,
        kink_excess=kink_excess,
        smooth_fit_defect=fit_defect,
        region_defect=region_defect,
        min_value=min_value,
        tail_lower=tail_lower,
        tail_upper=tail_upper,
        grid_nodes=int(x.size),
        passes=passes,
    )


# --------------------------------------------------------------------------
# continuity across regime boundaries
# --------------------------------------------------------------------------


class Boundary(str, enum.Enum):
    ZBETA = "zbeta"
    Z0 = "z0"
    Z_MINUS = "z_minus"
    ZC = "zc"
    Z_PLUS = "z_plus"


_APPLICABLE = {
    Boundary.ZBETA: (Case.I, Case.II),
    Boundary.Z0: (Case.I, Case.II, Case.III),
    Boundary.Z_MINUS: (Case.III,),
    Boundary.ZC: (Case.III,),
    Boundary.Z_PLUS: (Case.IV,),
}


def boundary_location(params, boundary, cfg: RootConfig = DEFAULT) -> float:
    from . import boundary as fb

    boundary = Boundary(boundary)
    prof = classify(params)
    if prof.case not in _APPLICABLE[boundary]:
        raise CaseMismatch(f"{boundary.value} is not a regime boundary in Case {prof.case.value}")
    if boundary is Boundary.ZBETA:
        return prof.zbeta
    if boundary is Boundary.Z0:
        return prof.z0
    if boundary is Boundary.ZC:
        return prof.zc
    if boundary is Boundary.Z_MINUS:
        return fb.z_minus(prof, cfg)
    return fb.z_plus(prof, cfg)


def regime_continuity_check(params, boundary, offset=1e-8, grid_cfg: GridConfig = GridConfig()) -> float:
    """Sup-norm gap between the solutions at boundary * (1 -/+ offset)."""
    zb = boundary_location(params, boundary)
    below = solve(params.replace(z=zb * (1 - offset)))
    above = solve(params.replace(z=zb * (1 + offset)))
    x = standard_grid(below, grid_cfg, extra=above.breakpoints)
    return float(np.max(np.abs(below.evaluate(x) - above.evaluate(x))))
