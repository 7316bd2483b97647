"""Minimal excessive functions and the scale function of skew GBM.

psi(., z) is the increasing and phi(., z) the decreasing solution of the
Euler ODE  sigma^2 x^2 g'' / 2 + b x g' - r g = 0  on (0, z) and (z, inf),
glued at z by  (1 + beta) g'(z+) = (1 - beta) g'(z-).

All powers are taken in log space, and the right branch of psi is written
as  x^n (A + B_unit (z / x)^(n - m)),  so that z^(n - m) is never formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError


def _positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("x must be positive")
    return x


def _out(value, like):
    return float(value) if np.ndim(like) == 0 else value


@dataclass(frozen=True)
class ExcessivePair:
    """The constants of psi and phi for a given skew level."""

    A: float
    Bz: float
    phiC: float
    phiD: float

    @classmethod
    def of(cls, params, z=None):
        z = params.z if z is None else z
        m, n, beta = params.m, params.n, params.beta
        zpow = math.exp((n - m) * math.log(z))
        # continuity at z and the skew condition fix C z^-(n-m) + D = 1
        phiC = 2 * m * beta * zpow / ((n - m) * (1 - beta))
        phiD = (n * (1 - beta) - m * (1 + beta)) / ((n - m) * (1 - beta))
        return cls(params.A, params.B(z), phiC, phiD)


def _right_ratio(x, z, params):
    """(z / x)^(n - m), which lies in (0, 1] for x >= z."""
    return np.exp((params.n - params.m) * np.log(z / x))


def log_psi(x, z, params):
    """log psi(x; z), finite wherever x is."""
    x = _positive(x)
    n = params.n
    with np.errstate(divide="ignore", invalid="ignore"):
        right = n * np.log(x) + np.log(params.A + params.B_unit * _right_ratio(x, z, params))
    out = np.where(x < z, n * np.log(x), right)
    return _out(out, x)


def psi(x, z, params):
    x = _positive(x)
    n = params.n
    ratio = _right_ratio(np.maximum(x, z), z, params)
    xn = np.exp(n * np.log(x))
    out = np.where(x < z, xn, xn * (params.A + params.B_unit * ratio))
    return _out(out, x)


def _psi_d1_right(x, z, params):
    m, n = params.m, params.n
    ratio = _right_ratio(x, z, params)
    return np.exp((n - 1) * np.log(x)) * (n * params.A + m * params.B_unit * ratio)


def psi_dminus(x, z, params):
    """Left derivative of psi(., z)."""
    x = _positive(x)
    n = params.n
    left = n * np.exp((n - 1) * np.log(x))
    right = _psi_d1_right(np.maximum(x, z), z, params)
    out = np.where(x <= z, left, right)
    return _out(out, x)


def psi_dplus(x, z, params):
    """Right derivative of psi(., z)."""
    x = _positive(x)
    n = params.n
    left = n * np.exp((n - 1) * np.log(x))
    right = _psi_d1_right(np.maximum(x, z), z, params)
    out = np.where(x < z, left, right)
    return _out(out, x)


def psi_d2(x, z, params):
    """Second derivative of psi(., z); NaN at x == z where it is undefined."""
    x = _positive(x)
    m, n = params.m, params.n
    left = n * (n - 1) * np.exp((n - 2) * np.log(x))
    ratio = _right_ratio(np.maximum(x, z), z, params)
    right = np.exp((n - 2) * np.log(x)) * (
        n * (n - 1) * params.A + m * (m - 1) * params.B_unit * ratio
    )
    out = np.where(x < z, left, np.where(x > z, right, np.nan))
    return _out(out, x)


def psi_d2_at_skew(z, params) -> tuple[float, float]:
    """The one-sided second derivatives (psi''(z-), psi''(z+))."""
    m, n = params.m, params.n
    zn2 = math.exp((n - 2) * math.log(z))
    left = n * (n - 1) * zn2
    right = zn2 * (n * (n - 1) * params.A + m * (m - 1) * params.B_unit)
    return left, right


def phi(x, z, params):
    x = _positive(x)
    m, n = params.m, params.n
    pair = ExcessivePair.of(params, z)
    xm = np.exp(m * np.log(x))
    # C(z) x^n + D x^m = x^m (C_unit (x/z)^(n-m) + D) with C_unit = C(z) z^-(n-m)
    c_unit = pair.phiC * math.exp(-(n - m) * math.log(z))
    ratio = np.exp((n - m) * np.log(np.minimum(x, z) / z))
    out = np.where(x < z, xm * (c_unit * ratio + pair.phiD), xm)
    return _out(out, x)


def phi_dminus(x, z, params):
    x = _positive(x)
    m, n = params.m, params.n
    pair = ExcessivePair.of(params, z)
    c_unit = pair.phiC * math.exp(-(n - m) * math.log(z))
    ratio = np.exp((n - m) * np.log(np.minimum(x, z) / z))
    xm1 = np.exp((m - 1) * np.log(x))
    left = xm1 * (n * c_unit * ratio + m * pair.phiD)
    out = np.where(x <= z, left, m * xm1)
    return _out(out, x)


def phi_dplus(x, z, params):
    x = _positive(x)
    m, n = params.m, params.n
    pair = ExcessivePair.of(params, z)
    c_unit = pair.phiC * math.exp(-(n - m) * math.log(z))
    ratio = np.exp((n - m) * np.log(np.minimum(x, z) / z))
    xm1 = np.exp((m - 1) * np.log(x))
    left = xm1 * (n * c_unit * ratio + m * pair.phiD)
    out = np.where(x < z, left, m * xm1)
    return _out(out, x)


# --------------------------------------------------------------------------
# scale function
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleFunction:
    """Scale function p of skew GBM, normalised by p(x1) = 0, p'(x1-) = 1.

    p' is (x / x1)^e with e = -2b / sigma^2, multiplied by the jump factor
    (1 - beta) / (1 + beta) on the side of z away from x1.  Evaluations at
    x == z return the right derivative.
    """

    x1: float
    exponent: float
    jump: float
    z: float

    @classmethod
    def of(cls, params, x1=None):
        x1 = params.K if x1 is None else float(x1)
        return cls(
            x1=x1,
            exponent=-2.0 * params.b / params.sigma ** 2,
            jump=(1.0 - params.beta) / (1.0 + params.beta),
            z=params.z,
        )

    def _factor(self, x, side="right"):
        """Jump contribution of the single atom at z to p'(x)."""
        z, x1 = self.z, self.x1
        if side == "right":
            crossed_up = (x1 <= z) & (z <= x)
            crossed_down = (x < z) & (z < x1)
        else:
            crossed_up = (x1 <= z) & (z < x)
            crossed_down = (x <= z) & (z < x1)
        return np.where(crossed_up, self.jump, np.where(crossed_down, 1.0 / self.jump, 1.0))

    def density(self, x, side="right"):
        x = _positive(x)
        out = np.exp(self.exponent * np.log(x / self.x1)) * self._factor(x, side)
        return _out(out, x)

    def _primitive(self, lo, hi):
        """Integral of (u / x1)^e over [lo, hi]."""
        e1 = self.exponent + 1.0
        x1 = self.x1
        if abs(e1) < 1e-14:
            return x1 * (np.log(hi / x1) - np.log(lo / x1))
        return x1 / e1 * (np.exp(e1 * np.log(hi / x1)) - np.exp(e1 * np.log(lo / x1)))

    def __call__(self, x):
        x = _positive(x)
        z, x1 = self.z, self.x1
        base = self._primitive(x1, x)
        if x1 <= z:
            # density carries the jump above z
            extra = (self.jump - 1.0) * self._primitive(z, np.maximum(x, z))
        else:
            # density carries the inverse jump below z
            extra = (1.0 / self.jump - 1.0) * -self._primitive(np.minimum(x, z), z)
        return _out(base + extra, x)

    def _primitive_inverse(self, value, lo):
        """Solve  _primitive(lo, x) = value  for x."""
        e1 = self.exponent + 1.0
        x1 = self.x1
        if abs(e1) < 1e-14:
            return lo * np.exp(value / x1)
        base = np.exp(e1 * np.log(lo / x1)) + e1 * value / x1
        return x1 * np.exp(np.log(base) / e1)

    def inverse(self, q):
        q = np.asarray(q, dtype=float)
        z, x1 = self.z, self.x1
        pz = float(self(z))
        with np.errstate(invalid="ignore", divide="ignore"):
            if x1 <= z:
                below = self._primitive_inverse(q, x1)
                above = self._primitive_inverse((q - pz) / self.jump, z)
                out = np.where(q < pz, below, above)
            else:
                above = self._primitive_inverse(q, x1)
                below = self._primitive_inverse((q - pz) * self.jump, z)
                out = np.where(q >= pz, above, below)
        if np.any(~np.isfinite(out)) or np.any(out <= 0):
            raise DomainError("q lies outside the range of the scale function")
        return _out(out, q)


def scale(x, params, x1=None):
    return ScaleFunction.of(params, x1)(x)


def scale_density(x, params, x1=None, side="right"):
    return ScaleFunction.of(params, x1).density(x, side)


def scale_inverse(q, params, x1=None):
    return ScaleFunction.of(params, x1).inverse(q)


def scale_density_general(x, drift_over_var, atoms=(), x1=1.0, epsabs=1e-12):
    """p'(x) for a diffusion with drift-to-variance ratio b(u)/sigma^2(u)
    and finitely many skew atoms ``[(z_j, beta_j), ...]``.

    Normalised so that p'(x1-) = 1 and right-continuous at the atoms.
    The drift integral is computed by adaptive quadrature.
    """
    zs = [float(zj) for zj, _ in atoms]
    if len(set(zs)) != len(zs):
        raise DomainError("atoms must be distinct")
    for _, bj in atoms:
        if not -1.0 < bj < 1.0:
            raise DomainError("each atom skewness must lie in (-1, 1)")
    if x <= 0:
        raise DomainError("x must be positive")
    lo, hi = (x1, x) if x >= x1 else (x, x1)
    breaks = sorted(zj for zj in zs if lo < zj < hi)
    integral, err = integrate.quad(
        drift_over_var, lo, hi, points=breaks or None, epsabs=epsabs, epsrel=1e-12, limit=200
    )
    if not math.isfinite(integral) or err > max(1e-8, 1e-8 * abs(integral)):
        raise DomainError(f"quadrature failed on [{lo}, {hi}] (error estimate {err})")
    factor = 1.0
    for zj, bj in atoms:
        jump = (1.0 - bj) / (1.0 + bj)
        if x >= x1 and x1 <= zj <= x:
            factor *= jump
        elif x < x1 and x < zj < x1:
            factor /= jump
    sign = -1.0 if x >= x1 else 1.0
    return math.exp(sign * 2.0 * integral) * factor
