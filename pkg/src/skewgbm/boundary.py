"""Free-boundary equations and their solvers.

The brackets used by every solver come from the sign structure of the
auxiliary functions: F(., z) is negative between the lower critical point
and alpha(z) and positive beyond it, J(., z) vanishes at z, decreases up to
zc and then increases through xi(z), and so on.  Every solve therefore
starts from a verified sign change and never leaves it.

Internally the functions are evaluated after dividing out positive factors
(A max(x, z)^(n-m) for F, A max(x, z)^-m for J, z^-m for H) so that the
bracket values stay of order K even when n - m is large.  Dividing by the
larger of x and z matters: with z much below x the factor (x / z)^(n-m)
would otherwise magnify the rounding in (n - 1) x - n K past the other
term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure, CaseMismatch, DomainError
from .model import Case, CaseProfile
from .roots import DEFAULT, RootConfig, bracketed_root, expand_upward
from .special import psi

EXPANSION_CAP = 1e12  # z_plus / z0 reaches 1e5 and more when n is close to 1


def _pow_ratio(x, z, p):
    return np.exp(p * np.log(np.asarray(x, dtype=float) / z))


# --------------------------------------------------------------------------
# F and alpha
# --------------------------------------------------------------------------


def F(x, z, profile):
    """[(n-1)x - nK] A x^(n-m) + [(m-1)x - mK] B(z)."""
    prof = profile
    x = np.asarray(x, dtype=float)
    m, n, K = prof.m, prof.n, prof.K
    p = prof.params
    out = ((n - 1) * x - n * K) * prof.A * np.exp((n - m) * np.log(x)) + (
        (m - 1) * x - m * K
    ) * p.B(z)
    return float(out) if out.ndim == 0 else out


def F_scaled(x, z, profile):
    """F(x; z) / (A max(x, z)^(n-m)), same sign as F."""
    prof = profile
    m, n, K = prof.m, prof.n, prof.K
    x = np.asarray(x, dtype=float)
    # one of the two ratios is 1, the other at most 1
    up = _pow_ratio(np.minimum(x, z), z, n - m)
    down = _pow_ratio(z, np.maximum(x, z), n - m)
    out = ((n - 1) * x - n * K) * up + ((m - 1) * x - m * K) * prof.params.B_unit / prof.A * down
    return float(out) if out.ndim == 0 else out


def dF_dx(x, z, profile):
    prof = profile
    m, n = prof.m, prof.n
    x = np.asarray(x, dtype=float)
    out = (n - 1) * ((n - m + 1) * x - (n - m) * prof.z0) * prof.A * np.exp(
        (n - m - 1) * np.log(x)
    ) + (m - 1) * prof.params.B(z)
    return float(out) if out.ndim == 0 else out


def _snap_root(f, lo, hi, scale, cfg, what):
    """Bracketed root that tolerates round-off at a degenerate endpoint.

    When a bracket endpoint is a limit of the root (for example alpha(z) ->
    zbeta as z -> zbeta) the function value there can be of rounding size
    with the wrong sign.  Such an endpoint is returned as the root.
    """
    f_lo, f_hi = f(lo), f(hi)
    tiny = 1e-11 * scale
    if f_lo < 0 < f_hi or f_lo > 0 > f_hi:
        return bracketed_root(f, lo, hi, scale, cfg, f_lo, f_hi)
    if f_lo == 0 or abs(f_lo) <= tiny:
        return lo
    if f_hi == 0 or abs(f_hi) <= tiny:
        return hi
    raise BracketFailure(f"{what}: no sign change on [{lo!r}, {hi!r}] (f = {f_lo!r}, {f_hi!r})")


def alpha_domain(profile) -> tuple[float, float]:
    """Open interval of skew levels on which alpha is defined."""
    case = profile.case
    if case in (Case.I, Case.II):
        return 0.0, profile.zbeta
    if case is Case.III:
        return 0.0, profile.frakC * profile.zc
    return 0.0, math.inf


def alpha(z, profile, cfg: RootConfig = DEFAULT) -> float:
    """Root of F(., z) = 0 that defines the one-sided stopping boundary."""
    prof = profile
    lo_dom, hi_dom = alpha_domain(prof)
    if not lo_dom < z < hi_dom:
        raise DomainError(
            f"alpha is defined for z in ({lo_dom}, {hi_dom}) in Case {prof.case.value}; got {z}"
        )
    K = prof.K

    def f(x):
        return F_scaled(x, z, prof)

    scale = prof.z0 * K
    if prof.case in (Case.I, Case.II):
        return _snap_root(f, prof.zbeta, prof.z0, scale, cfg, "alpha")
    if prof.case is Case.III:
        return _snap_root(f, prof.zc, prof.z0, scale, cfg, "alpha")
    # Case IV
    zb = prof.zbeta
    if prof.zbeta_defined and zb > 0:
        if z == zb:
            return zb
        if z < zb:
            return _snap_root(f, max(z, prof.z0), zb, scale, cfg, "alpha")
        return _snap_root(f, zb, z, scale, cfg, "alpha")
    lo = max(z, prof.z0)
    cap = EXPANSION_CAP * max(prof.z0, z)
    a, b = expand_upward(f, lo, lo * cfg.expansion, cap, cfg, sign_at_lo=-1.0)
    return _snap_root(f, a, b, scale, cfg, "alpha")


def alpha_limit(profile) -> float:
    """Value approached by alpha(z) at the upper end of its domain."""
    if profile.case in (Case.I, Case.II):
        return profile.zbeta
    if profile.case is Case.III:
        return profile.zc
    raise CaseMismatch("alpha has no finite right endpoint in Case IV")


# --------------------------------------------------------------------------
# g and the thresholds z_minus, z_plus
# --------------------------------------------------------------------------


def gamma_const(a, z, profile) -> float:
    """(a - K) / psi(a; z), the multiplier of psi left of a boundary a."""
    return (a - profile.K) / psi(a, z, profile.params)


def g(x, z, profile, cfg: RootConfig = DEFAULT, a=None):
    """(alpha(z) - K)/psi(alpha(z); z) - (x - K)/psi(x; z)."""
    a = alpha(z, profile, cfg) if a is None else a
    x = np.asarray(x, dtype=float)
    out = gamma_const(a, z, profile) - (x - profile.K) / psi(x, z, profile.params)
    return float(out) if out.ndim == 0 else out


def _alpha_or_limit(z, profile, cfg):
    lo, hi = alpha_domain(profile)
    if z >= hi:
        return alpha_limit(profile)
    return alpha(z, profile, cfg)


def _gbar(z, profile, cfg):
    """g(z, z) with alpha extended continuously to the end of its domain."""
    a = _alpha_or_limit(z, profile, cfg)
    return g(z, z, profile, cfg, a=a)


def z_minus(profile, cfg: RootConfig = DEFAULT) -> float:
    """Unique zero of z -> g(z, z) in (K, frakC * zc); Case III only."""
    if profile.case is not Case.III:
        raise CaseMismatch("z_minus exists only in Case III")
    lo, hi = profile.K, profile.frakC * profile.zc
    return bracketed_root(lambda z: _gbar(z, profile, cfg), lo, hi, profile.K, cfg)


def _gplus(z, profile, cfg):
    return g(profile.z0, z, profile, cfg)


def beyond_z_plus(z, profile, cfg: RootConfig = DEFAULT) -> bool:
    """Whether z > z_plus, read off the sign of g(z0, z) without locating
    z_plus (which can lie beyond any bracket when n is close to 1)."""
    if profile.case is not Case.IV:
        raise CaseMismatch("z_plus exists only in Case IV")
    return z > profile.z0 and _gplus(z, profile, cfg) < 0


def z_plus(profile, cfg: RootConfig = DEFAULT, upper=None) -> float:
    """Unique zero of z -> g(z0, z) in (z0, inf); Case IV only.

    ``upper``, if given, must satisfy g(z0, upper) < 0 and is used as the
    right end of the bracket.
    """
    if profile.case is not Case.IV:
        raise CaseMismatch("z_plus exists only in Case IV")
    z0 = profile.z0

    def f(z):
        return _gplus(z, profile, cfg)

    if profile.zbeta_defined and profile.zbeta > z0:
        lo, hi = z0, profile.zbeta
    elif upper is not None:
        lo, hi = z0, upper
    else:
        lo, hi = expand_upward(f, z0, z0 * cfg.expansion, EXPANSION_CAP * z0, cfg, 1.0)
    return bracketed_root(f, lo, hi, profile.K, cfg)


def frakz(z, profile, cfg: RootConfig = DEFAULT, zm=None) -> float:
    """Zero of g(., z) in (z, alpha(z)) for z in [z_minus, frakC zc)."""
    if profile.case is not Case.III:
        raise CaseMismatch("frakz exists only in Case III")
    zm = z_minus(profile, cfg) if zm is None else zm
    hi_dom = profile.frakC * profile.zc
    if not zm <= z < hi_dom:
        raise DomainError(f"frakz is defined for z in [{zm}, {hi_dom}); got {z}")
    if z == zm:
        return zm
    a = alpha(z, profile, cfg)
    K = profile.K
    # g(., z) rises on (z, x_star) and falls on (x_star, alpha), x_star being
    # the zero of F(., z) below zc.
    x_star = bracketed_root(lambda x: F_scaled(x, z, profile), z, profile.zc, K, cfg)
    return bracketed_root(lambda x: g(x, z, profile, cfg, a=a), z, x_star, K, cfg)


# --------------------------------------------------------------------------
# J and xi (Case III, isolated stopping point at z)
# --------------------------------------------------------------------------


def J(x, z, profile):
    """J(x; z) / A, i.e. the defining function of xi with A divided out."""
    m, n, K = profile.m, profile.n, profile.K
    x = np.asarray(x, dtype=float)
    lx, lz = np.log(x), math.log(z)
    out = (
        ((n - 1) * x - n * K) * np.exp(-m * lx)
        - ((m - 1) * x - m * K) * np.exp((n - m) * lz - n * lx)
        - (n - m) * (z - K) * math.exp(-m * lz)
    )
    return float(out) if out.ndim == 0 else out


def J_scaled(x, z, profile):
    """J(x; z) / (A max(x, z)^-m), same sign as J."""
    m, n, K = profile.m, profile.n, profile.K
    x = np.asarray(x, dtype=float)
    big = np.maximum(x, z)
    out = (
        ((n - 1) * x - n * K) * _pow_ratio(x, big, -m)
        - ((m - 1) * x - m * K) * _pow_ratio(x, big, -n) * _pow_ratio(z, big, n - m)
        - (n - m) * (z - K) * _pow_ratio(z, big, -m)
    )
    return float(out) if out.ndim == 0 else out


def xi(z, profile, cfg: RootConfig = DEFAULT) -> float:
    """Zero of J(., z) in (zc, z0); strictly decreasing in z on (0, zc)."""
    if profile.case is not Case.III:
        raise CaseMismatch("xi exists only in Case III")
    if not 0 < z < profile.zc:
        raise DomainError(f"xi is defined for z in (0, {profile.zc}); got {z}")
    return _snap_root(
        lambda x: J_scaled(x, z, profile), profile.zc, profile.z0, profile.z0 * profile.K, cfg, "xi"
    )


def point_plus_ray_constants(xi_value, profile) -> tuple[float, float]:
    """C, D of the continuation piece C x^n + D x^m on (z, xi)."""
    return smooth_fit_constants(xi_value, profile)


def smooth_fit_constants(x, profile) -> tuple[float, float]:
    """C, D such that C y^n + D y^m meets y - K in a C^1 way at y = x."""
    m, n, K = profile.m, profile.n, profile.K
    C = -((m - 1) * x - m * K) * math.exp(-n * math.log(x)) / (n - m)
    D = ((n - 1) * x - n * K) * math.exp(-m * math.log(x)) / (n - m)
    return C, D


# --------------------------------------------------------------------------
# G, H and the pair (gamma, zeta) (Case IV, two stopping intervals)
# --------------------------------------------------------------------------


def G(x, y, z, profile):
    m, n, K = profile.m, profile.n, profile.K
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = (
        ((n - 1) * y - n * K) * _pow_ratio(y, z, -m)
        - ((m - 1) * y - m * K) * _pow_ratio(y, z, -n)
        - ((n - 1) * x - n * K) * _pow_ratio(x, z, -m)
        + ((m - 1) * x - m * K) * _pow_ratio(x, z, -n)
    )
    return float(out) if out.ndim == 0 else out


def H(x, y, z, profile):
    """y^-n F(y; z) - (1-beta)/(1+beta) [(n-1)x - nK] x^-m."""
    m, n, K = profile.m, profile.n, profile.K
    p = profile.params
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.exp(-n * np.log(y)) * F(y, z, profile) - ((n - 1) * x - n * K) * np.exp(
        -m * np.log(x)
    ) / p.skew_ratio
    return float(out) if out.ndim == 0 else out


def H_scaled(x, y, z, profile):
    """z^m H(x, y; z)."""
    m, n, K = profile.m, profile.n, profile.K
    p = profile.params
    out = (
        ((n - 1) * y - n * K) * profile.A * _pow_ratio(y, z, -m)
        + ((m - 1) * y - m * K) * p.B_unit * _pow_ratio(y, z, -n)
        - ((n - 1) * x - n * K) * _pow_ratio(x, z, -m) / p.skew_ratio
    )
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GammaZeta:
    gamma: float
    zeta: float


def L(x, z, profile, cfg: RootConfig = DEFAULT) -> float:
    """Unique y > z with G(x, y; z) = 0, for x in [z0, z)."""
    if not profile.z0 <= x < z:
        raise DomainError(f"L is defined for x in [{profile.z0}, {z}); got {x}")

    def f(y):
        return G(x, y, z, profile)

    lo, hi = expand_upward(f, z, z * cfg.expansion, EXPANSION_CAP * z, cfg, -1.0)
    return _snap_root(f, lo, hi, z * profile.K, cfg, "L")


def gamma_zeta(z, profile, cfg: RootConfig = DEFAULT):
    """The pair (gamma, zeta) with z0 < gamma < z < zeta solving G = H = 0.

    Returns ``None`` when no such pair exists, which happens exactly when
    z <= z_plus.
    """
    if profile.case is not Case.IV:
        raise CaseMismatch("gamma_zeta exists only in Case IV")
    z0 = profile.z0
    if z <= z0:
        return None

    def h(x):
        # L(x) runs off to infinity as x -> z0 when n is large, and H with it
        try:
            y = L(x, z, profile, cfg)
        except BracketFailure:
            return math.inf
        return H_scaled(x, y, z, profile)

    h0 = h(z0)
    if not h0 > 0:
        return None
    # h decreases towards H(z, z; z) < 0 as x -> z
    gap = 0.5 * (z - z0)
    x_hi = z - gap
    h_hi = h(x_hi)
    while h_hi > 0:
        gap *= 0.25
        if gap < 1e-14 * z:
            raise BracketFailure("outer gamma solve: no sign change below z")
        x_hi = z - gap
        h_hi = h(x_hi)
    x_lo = z0
    while math.isinf(h0):
        mid = 0.5 * (x_lo + x_hi)
        h_mid = h(mid)
        if h_mid < 0:
            x_hi, h_hi = mid, h_mid
        else:
            x_lo, h0 = mid, h_mid
    gamma = bracketed_root(h, x_lo, x_hi, profile.K, cfg, h0, h_hi)
    zeta = L(gamma, z, profile, cfg)
    return GammaZeta(gamma, zeta)


def two_interval_constants(pair: GammaZeta, profile) -> tuple[float, float, float, float]:
    """(C_l, D_l, C_r, D_r) from smooth fit at gamma and zeta."""
    Cl, Dl = smooth_fit_constants(pair.gamma, profile)
    Cr, Dr = smooth_fit_constants(pair.zeta, profile)
    return Cl, Dl, Cr, Dr


def gh_system_residuals(pair: GammaZeta, z, profile) -> tuple[float, float]:
    """Residuals of the original two-equation system before it is reduced
    to G = 0, H = 0; both vanish at a solution."""
    m, n, K, beta = profile.m, profile.n, profile.K, profile.beta
    g_, ze = pair.gamma, pair.zeta
    lz = math.log(z)
    zn_ze = math.exp(n * (lz - math.log(ze)))
    zm_ze = math.exp(m * (lz - math.log(ze)))
    zn_g = math.exp(n * (lz - math.log(g_)))
    zm_g = math.exp(m * (lz - math.log(g_)))
    c1 = (n * (1 - beta) - m * (1 + beta)) / ((n - m) * (1 + beta))
    c2 = 2 * m * beta / ((n - m) * (1 + beta))
    c3 = 2 * n * beta / ((n - m) * (1 + beta))
    c4 = (n * (1 + beta) - m * (1 - beta)) / ((n - m) * (1 + beta))
    r2 = (
        ((m - 1) * ze - m * K) * zn_ze
        - c1 * ((m - 1) * g_ - m * K) * zn_g
        - c2 * ((n - 1) * g_ - n * K) * zm_g
    )
    r1 = (
        ((n - 1) * ze - n * K) * zm_ze
        + c3 * ((m - 1) * g_ - m * K) * zn_g
        - c4 * ((n - 1) * g_ - n * K) * zm_g
    )
    return r2, r1
