"""Closed-form value function of the perpetual call on skew GBM.

:func:`solve` picks the qualitative regime from the case tag and the
position of the skew level z relative to the critical points, and stores the
answer as exact power-law pieces ``cn x^n + cm x^m`` or the payoff ``x - K``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import boundary as fb
from .errors import BracketFailure, CaseMismatch, DomainError
from .model import Case, CaseProfile, SkewGbmParams, classify
from .roots import DEFAULT, RootConfig
from .special import ScaleFunction, psi_dminus, psi_dplus

POWER = "power"
AFFINE = "affine"


class Regime(str, enum.Enum):
    ONE_SIDED_ALPHA = "OneSidedAlpha"  # stop on [alpha(z), inf)
    ONE_SIDED_AT_Z = "OneSidedAtZ"  # stop on [z, inf), no smooth fit at z
    ONE_SIDED_Z0 = "OneSidedZ0"  # stop on [z0, inf), z inside
    POINT_PLUS_RAY = "PointPlusRay"  # stop on {z} and [xi, inf)
    TWO_INTERVALS = "TwoIntervals"  # stop on [z0, gamma] and [zeta, inf)


@dataclass(frozen=True)
class Piece:
    lo: float
    hi: float
    kind: str
    cn: float = 0.0
    cm: float = 0.0

    def value(self, x, params):
        if self.kind == AFFINE:
            return x - params.K
        return self.cn * np.exp(params.n * np.log(x)) + self.cm * np.exp(params.m * np.log(x))

    def d1(self, x, params):
        if self.kind == AFFINE:
            return np.ones_like(x)
        m, n = params.m, params.n
        return n * self.cn * np.exp((n - 1) * np.log(x)) + m * self.cm * np.exp((m - 1) * np.log(x))

    def d2(self, x, params):
        if self.kind == AFFINE:
            return np.zeros_like(x)
        m, n = params.m, params.n
        return n * (n - 1) * self.cn * np.exp((n - 2) * np.log(x)) + m * (m - 1) * self.cm * np.exp(
            (m - 2) * np.log(x)
        )

    def to_dict(self):
        return {
            "lo": self.lo,
            "hi": None if math.isinf(self.hi) else self.hi,
            "form": {"type": self.kind, "cn": self.cn, "cm": self.cm},
        }

    @classmethod
    def from_dict(cls, d):
        hi = math.inf if d["hi"] is None else d["hi"]
        form = d["form"]
        return cls(d["lo"], hi, form["type"], form.get("cn", 0.0), form.get("cm", 0.0))


@dataclass(frozen=True)
class StoppingRegion:
    """Disjoint sorted closed components; a point is a (p, p) component and
    the last component is a ray (lo, inf)."""

    components: tuple[tuple[float, float], ...]

    def __post_init__(self):
        comps = self.components
        if not comps or not math.isinf(comps[-1][1]):
            raise DomainError("the rightmost stopping component must be a ray")
        for (lo1, hi1), (lo2, _) in zip(comps, comps[1:]):
            if not lo1 <= hi1 < lo2:
                raise DomainError("stopping components must be disjoint and sorted")

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.components:
            inside |= (x >= lo) & (x <= hi)
        return bool(inside) if inside.ndim == 0 else inside

    @property
    def points(self):
        return [lo for lo, hi in self.components if lo == hi]

    def to_list(self):
        return [[lo, None if math.isinf(hi) else hi] for lo, hi in self.components]

    @classmethod
    def from_list(cls, items):
        return cls(tuple((lo, math.inf if hi is None else hi) for lo, hi in items))


@dataclass(frozen=True)
class PiecewiseValueFunction:
    params: SkewGbmParams
    pieces: tuple[Piece, ...]
    region: StoppingRegion
    regime: Regime
    constants: dict = field(default_factory=dict)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([p.hi for p in self.pieces[:-1]])

    @property
    def profile(self) -> CaseProfile:
        return classify(self.params)

    def _index(self, x, side):
        return np.searchsorted(self.breakpoints, x, side=side)

    def _apply(self, x, method, side):
        x = np.asarray(x, dtype=float)
        if np.any(~(x > 0)):
            raise DomainError("x must be positive")
        idx = self._index(x, side)
        out = np.empty(x.shape)
        for i, piece in enumerate(self.pieces):
            mask = idx == i
            if np.any(mask):
                out[mask] = getattr(piece, method)(x[mask], self.params)
        return float(out) if out.ndim == 0 else out

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        return self._apply(x, "value", "left")

    def d_left(self, x):
        return self._apply(x, "d1", "left")

    def d_right(self, x):
        return self._apply(x, "d1", "right")

    def d2(self, x, side="left"):
        return self._apply(x, "d2", side)

    def is_stopping(self, x):
        return self.region.contains(x)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "regime": self.regime.value,
            "pieces": [p.to_dict() for p in self.pieces],
            "stopping_region": self.region.to_list(),
            "constants": dict(self.constants),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d) -> "PiecewiseValueFunction":
        return cls(
            SkewGbmParams.from_dict(d["params"]),
            tuple(Piece.from_dict(p) for p in d["pieces"]),
            StoppingRegion.from_list(d["stopping_region"]),
            Regime(d["regime"]),
            dict(d.get("constants", {})),
        )

    @classmethod
    def from_json(cls, text) -> "PiecewiseValueFunction":
        return cls.from_dict(json.loads(text))

    def replace_constant(self, piece_index, name, factor) -> "PiecewiseValueFunction":
        """Copy with one coefficient (or piece endpoint) scaled by ``factor``.

        Used for mutation testing of the verifier.
        """
        pieces = list(self.pieces)
        p = pieces[piece_index]
        if name in ("cn", "cm"):
            pieces[piece_index] = Piece(p.lo, p.hi, p.kind, *(
                (p.cn * factor, p.cm) if name == "cn" else (p.cn, p.cm * factor)
            ))
        elif name == "hi":
            new_hi = p.hi * factor
            pieces[piece_index] = Piece(p.lo, new_hi, p.kind, p.cn, p.cm)
            q = pieces[piece_index + 1]
            pieces[piece_index + 1] = Piece(new_hi, q.hi, q.kind, q.cn, q.cm)
        else:
            raise ValueError(name)
        return PiecewiseValueFunction(self.params, tuple(pieces), self.region, self.regime, self.constants)


# --------------------------------------------------------------------------
# assembly
# --------------------------------------------------------------------------


def _one_sided(params, prof, a, regime, extra=None):
    """w = Gamma psi(., z) below a and x - K above."""
    z, K = params.z, params.K
    gamma = fb.gamma_const(a, z, prof)
    if a > z:
        pieces = (
            Piece(0.0, z, POWER, gamma, 0.0),
            Piece(z, a, POWER, gamma * prof.A, gamma * params.B(z)),
            Piece(a, math.inf, AFFINE),
        )
    else:
        pieces = (Piece(0.0, a, POWER, gamma, 0.0), Piece(a, math.inf, AFFINE))
    consts = {"a": a, "Gamma": gamma}
    consts.update(extra or {})
    return PiecewiseValueFunction(params, pieces, StoppingRegion(((a, math.inf),)), regime, consts)


def _at_or_above(params, prof, extra=None):
    """a = min(z, z0): the boundary sits at z or at z0."""
    z = params.z
    if z <= prof.z0:
        return _one_sided(params, prof, z, Regime.ONE_SIDED_AT_Z, extra)
    return _one_sided(params, prof, prof.z0, Regime.ONE_SIDED_Z0, extra)


def _through_two_points(z, xi, prof):
    """C, D with C x^n + D x^m = x - K at x = z and x = xi.

    At the root xi of J this is the smooth-fit pair at xi, but computed this
    way it does not inherit the cancellation in (n - 1) xi - n K when xi is
    close to z0, which the factor (xi / z)^-m would blow up at z.
    """
    m, n, K = prof.m, prof.n, prof.K
    rn = math.exp(n * math.log(z / xi))  # (z / xi)^n
    rm = math.exp(m * math.log(xi / z))  # (xi / z)^m, below 1
    # u = D z^m solves u (1 - rm rn) = z - K - (xi - K) rn
    u = (z - K - (xi - K) * rn) / (1.0 - rm * rn)
    C = (xi - K - u * rm) * math.exp(-n * math.log(xi))
    D = u * math.exp(-m * math.log(z))
    return C, D


def _point_plus_ray(params, prof, cfg, extra):
    z, K, n = params.z, params.K, prof.n
    xi = fb.xi(z, prof, cfg)
    C, D = _through_two_points(z, xi, prof)
    left = (z - K) * math.exp(-n * math.log(z))
    pieces = (
        Piece(0.0, z, POWER, left, 0.0),
        Piece(z, xi, POWER, C, D),
        Piece(xi, math.inf, AFFINE),
    )
    region = StoppingRegion(((z, z), (xi, math.inf)))
    consts = {"xi": xi, "C": C, "D": D}
    consts.update(extra)
    return PiecewiseValueFunction(params, pieces, region, Regime.POINT_PLUS_RAY, consts)


def _two_intervals(params, prof, pair, extra):
    z, n, z0 = params.z, prof.n, prof.z0
    Cl, Dl, Cr, Dr = fb.two_interval_constants(pair, prof)
    left = math.exp((1 - n) * math.log(z0)) / n
    pieces = (
        Piece(0.0, z0, POWER, left, 0.0),
        Piece(z0, pair.gamma, AFFINE),
        Piece(pair.gamma, z, POWER, Cl, Dl),
        Piece(z, pair.zeta, POWER, Cr, Dr),
        Piece(pair.zeta, math.inf, AFFINE),
    )
    region = StoppingRegion(((z0, pair.gamma), (pair.zeta, math.inf)))
    consts = {"gamma": pair.gamma, "zeta": pair.zeta, "C_l": Cl, "D_l": Dl, "C_r": Cr, "D_r": Dr}
    consts.update(extra)
    return PiecewiseValueFunction(params, pieces, region, Regime.TWO_INTERVALS, consts)


def solve(params: SkewGbmParams, cfg: RootConfig = DEFAULT) -> PiecewiseValueFunction:
    """Value function and stopping region for every parameter regime.

    The pieces are powers x^n and x^m in double precision, so parameters
    with very large exponents (small sigma against large |b| or r) can
    leave the floating-point range; that surfaces as DomainError.
    """
    prof = classify(params)
    try:
        return _dispatch(params, prof, cfg)
    except (OverflowError, ZeroDivisionError) as exc:
        raise DomainError(
            f"exponents n = {prof.n:.6g}, m = {prof.m:.6g} leave the double-precision range "
            f"for these parameters ({exc})"
        ) from exc


def _dispatch(params, prof, cfg):
    z = params.z
    if prof.case in (Case.I, Case.II):
        if z < prof.zbeta:
            return _one_sided(params, prof, fb.alpha(z, prof, cfg), Regime.ONE_SIDED_ALPHA)
        return _at_or_above(params, prof)

    if prof.case is Case.III:
        zm = fb.z_minus(prof, cfg)
        extra = {"z_minus": zm}
        if z <= zm:
            return _one_sided(params, prof, fb.alpha(z, prof, cfg), Regime.ONE_SIDED_ALPHA, extra)
        if z < prof.zc:
            return _point_plus_ray(params, prof, cfg, extra)
        return _at_or_above(params, prof, extra)

    # Case IV
    extra = {}
    if fb.beyond_z_plus(z, prof, cfg):
        zp = extra["z_plus"] = fb.z_plus(prof, cfg, upper=z)
        pair = fb.gamma_zeta(z, prof, cfg) if z > zp else None
        if pair is not None:
            return _two_intervals(params, prof, pair, extra)
        # only reachable within rounding of z_plus, where both forms agree
    elif z > prof.z0:
        try:
            extra["z_plus"] = fb.z_plus(prof, cfg)
        except BracketFailure:
            pass  # z_plus is out of reach, and z is below it
    return _one_sided(params, prof, fb.alpha(z, prof, cfg), Regime.ONE_SIDED_ALPHA, extra)


def evaluate(vf, x):
    return vf.evaluate(x)


def d_left(vf, x):
    return vf.d_left(x)


def d_right(vf, x):
    return vf.d_right(x)


def stopping_rule(vf) -> StoppingRegion:
    return vf.region


class SmoothFitGap(NamedTuple):
    gap_p: float
    gap_psi: float


def _check_gap_domain(params):
    prof = classify(params)
    if prof.case not in (Case.I, Case.II):
        raise CaseMismatch("the smooth-fit gap is defined for Cases I and II")
    if not prof.zbeta <= params.z <= prof.z0:
        raise DomainError(f"z must lie in [{prof.zbeta}, {prof.z0}]")
    return prof


def smooth_fit_gap(params, cfg: RootConfig = DEFAULT) -> SmoothFitGap:
    """Jumps of v'/p' and v'/psi' across z, read off the assembled solution."""
    _check_gap_domain(params)
    vf = solve(params, cfg)
    z = params.z
    sf = ScaleFunction.of(params)
    left, right = vf.d_left(z), vf.d_right(z)
    gap_p = right / sf.density(z, "right") - left / sf.density(z, "left")
    gap_psi = right / psi_dplus(z, z, params) - left / psi_dminus(z, z, params)
    return SmoothFitGap(gap_p, gap_psi)


def smooth_fit_gap_closed_form(params) -> SmoothFitGap:
    prof = _check_gap_domain(params)
    z, n = params.z, prof.n
    slope = n - params.skew_ratio
    dz = z - prof.zbeta
    sf = ScaleFunction.of(params)
    gap_p = -slope * dz / (z * sf.density(z, "left"))
    gap_psi = -slope * dz / (n * math.exp(n * math.log(z)))
    return SmoothFitGap(gap_p, gap_psi)
