"""Bracketed scalar root finding."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import optimize

from .errors import BracketFailure, DomainError


@dataclass(frozen=True)
class RootConfig:
    rel_tol: float = 1e-13
    abs_tol: float = 1e-14  # multiplied by the strike
    max_iter: int = 200
    expansion: float = 2.0

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.expansion <= 1:
            raise DomainError("expansion factor must exceed 1")


DEFAULT = RootConfig()


def bracketed_root(f, lo, hi, scale=1.0, cfg=DEFAULT, f_lo=None, f_hi=None):
    """Root of ``f`` on [lo, hi]; the endpoint values must differ in sign.

    An endpoint at which ``f`` vanishes exactly is returned as the root.
    Brent's method keeps the sign-change bracket at every step.
    """
    f_lo = f(lo) if f_lo is None else f_lo
    f_hi = f(hi) if f_hi is None else f_hi
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or (f_lo > 0) == (f_hi > 0):
        raise BracketFailure(
            f"no sign change on [{lo!r}, {hi!r}]: f = ({f_lo!r}, {f_hi!r})"
        )
    rtol = max(cfg.rel_tol, 4.5e-16)
    return optimize.brentq(
        f, lo, hi, xtol=cfg.abs_tol * scale, rtol=rtol, maxiter=cfg.max_iter
    )


def expand_upward(f, lo, start, cap, cfg=DEFAULT, sign_at_lo=None):
    """Grow ``start`` geometrically until ``f`` changes sign relative to ``lo``.

    Returns the bracket (lo', hi) with the last point sharing the sign of
    ``f(lo)`` as lo'.
    """
    s_lo = math.copysign(1.0, f(lo)) if sign_at_lo is None else sign_at_lo
    prev, x = lo, start
    while x <= cap:
        fx = f(x)
        if fx == 0 or math.copysign(1.0, fx) != s_lo:
            return prev, x
        prev, x = x, x * cfg.expansion
    raise BracketFailure(f"no sign change found between {lo!r} and cap {cap!r}")
