"""Parameters, characteristic roots and case classification.

The process is a geometric Brownian motion with drift ``b`` and volatility
``sigma`` that is skewed at the level ``z`` with skewness ``beta``; it is
stopped to collect the call payoff ``(x - K)^+`` discounted at rate ``r``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from .errors import AssumptionViolated, DegenerateBeta, DomainError

PARAM_NAMES = ("r", "b", "sigma", "K", "z", "beta")


class Case(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"


@dataclass(frozen=True)
class SkewGbmParams:
    """The six scalars defining the stopping problem.

    Construction checks every invariant except ``r > b``, which is left to
    :func:`classify` so that the characteristic roots remain computable for
    any positive discount rate.
    """

    r: float
    b: float
    sigma: float
    K: float
    z: float
    beta: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.r <= 0:
            raise DomainError(f"discount rate r must be positive, got {self.r}")
        if self.K <= 0:
            raise DomainError(f"strike K must be positive, got {self.K}")
        if self.z <= 0:
            raise DomainError(f"skew level z must be positive, got {self.z}")
        if self.sigma == 0:
            raise DomainError("sigma must be nonzero")
        if not -1.0 < self.beta < 1.0:
            raise DomainError(f"beta must lie in (-1, 1), got {self.beta}")
        if self.beta == 0.0:
            raise DegenerateBeta(
                "beta = 0 is plain geometric Brownian motion; "
                "use classical_perpetual_call for the reference value"
            )

    @cached_property
    def roots(self) -> tuple[float, float]:
        return characteristic_roots(self)

    @property
    def m(self) -> float:
        return self.roots[0]

    @property
    def n(self) -> float:
        return self.roots[1]

    @property
    def skew_ratio(self) -> float:
        """(1 + beta) / (1 - beta)."""
        return (1.0 + self.beta) / (1.0 - self.beta)

    @cached_property
    def A(self) -> float:
        m, n, beta = self.m, self.n, self.beta
        return (n * (1 - beta) - m * (1 + beta)) / ((n - m) * (1 + beta))

    @cached_property
    def B_unit(self) -> float:
        """B(z) / z^(n-m): the z-independent factor of B."""
        m, n, beta = self.m, self.n, self.beta
        return 2 * n * beta / ((n - m) * (1 + beta))

    def B(self, z=None) -> float:
        z = self.z if z is None else z
        return self.B_unit * math.exp((self.n - self.m) * math.log(z))

    def replace(self, **changes) -> "SkewGbmParams":
        values = asdict(self)
        values.update(changes)
        return SkewGbmParams(**values)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "SkewGbmParams":
        missing = [name for name in PARAM_NAMES if name not in data]
        if missing:
            raise DomainError(f"missing parameters: {', '.join(missing)}")
        unknown = sorted(set(data) - set(PARAM_NAMES))
        if unknown:
            raise DomainError(f"unknown parameters: {', '.join(unknown)}")
        return cls(**{name: float(data[name]) for name in PARAM_NAMES})

    @classmethod
    def from_json(cls, text: str) -> "SkewGbmParams":
        return cls.from_dict(json.loads(text))


def characteristic_roots(params) -> tuple[float, float]:
    """Roots m < 0 < n of  sigma^2 k^2 / 2 + (b - sigma^2 / 2) k - r = 0.

    The larger root is computed directly and the smaller one from the product
    of roots, which avoids cancellation when one root is close to zero.
    """
    s2 = params.sigma ** 2
    p = params.b - 0.5 * s2
    disc = math.sqrt(p * p + 2.0 * s2 * params.r)
    if p <= 0:
        n = (-p + disc) / s2
        m = -2.0 * params.r / (s2 * n)
    else:
        m = (-p - disc) / s2
        n = -2.0 * params.r / (s2 * m)
    return m, n


@dataclass(frozen=True)
class CaseProfile:
    params: SkewGbmParams = field(repr=False)
    m: float
    n: float
    A: float
    beta_c: float
    zc: float
    zbeta: float
    z0: float
    frakC: float | None
    case: Case

    @property
    def K(self) -> float:
        return self.params.K

    @property
    def beta(self) -> float:
        return self.params.beta

    @property
    def z(self) -> float:
        return self.params.z

    @property
    def zbeta_defined(self) -> bool:
        return math.isfinite(self.zbeta)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "case": self.case.value,
            "m": self.m,
            "n": self.n,
            "A": self.A,
            "beta_c": self.beta_c,
            "zc": self.zc,
            "zbeta": self.zbeta if self.zbeta_defined else None,
            "z0": self.z0,
            "frakC": self.frakC,
        }


def _case_of(b: float, beta: float, beta_c: float) -> Case:
    if beta > 0:
        return Case.IV
    if b <= 0:
        return Case.I
    if beta >= beta_c:
        return Case.II
    return Case.III


def classify(params: SkewGbmParams) -> CaseProfile:
    """Compute every critical constant and the case tag of ``params``."""
    if params.r <= params.b:
        raise AssumptionViolated(
            f"r = {params.r} <= b = {params.b}: value function is infinite"
        )
    m, n = params.roots
    K, beta = params.K, params.beta
    denom = n + 2 * m - 1
    beta_c = (n - 1) / denom if denom != 0 else math.copysign(math.inf, n - 1)
    zc = params.r * K / (params.r - params.b)
    ratio = params.skew_ratio
    zbeta = n * K / (n - ratio) if n != ratio else math.inf
    z0 = n * K / (n - 1)
    case = _case_of(params.b, beta, beta_c)
    frakC = None
    if case is Case.III:
        inner = -(n - 1) * (n * (1 - beta) - m * (1 + beta)) / (2 * m * (m - 1) * beta)
        frakC = inner ** (1.0 / (n - m))
    return CaseProfile(params, m, n, params.A, beta_c, zc, zbeta, z0, frakC, case)


def convexity_coefficient(profile: CaseProfile) -> float:
    """(n - 1)(1 - beta) - 2 m beta; negative exactly in Case III."""
    beta = profile.beta
    return (profile.n - 1) * (1 - beta) - 2 * profile.m * beta


@dataclass(frozen=True)
class ConvexitySignature:
    x: np.ndarray
    sign: np.ndarray
    concave_window: tuple[float, float] | None


def convexity_signature(params, profile, probe_grid) -> ConvexitySignature:
    """Sign of the second derivative of psi(., z) on ``probe_grid``.

    In Case III the window [z, z / frakC] on which psi is concave is also
    reported.
    """
    from .special import psi_d2

    x = np.asarray(probe_grid, dtype=float)
    if np.any(x <= 0) or np.any(x == params.z):
        raise DomainError("probe points must be positive and different from z")
    sign = np.sign(psi_d2(x, params.z, params)).astype(int)
    window = None
    if profile.case is Case.III:
        window = (params.z, params.z / profile.frakC)
    return ConvexitySignature(x, sign, window)


def classical_perpetual_call(x, r, b, sigma, K):
    """Perpetual call on plain GBM: (a - K)(x / a)^n below a = nK/(n-1)."""
    if r <= b:
        raise AssumptionViolated("r <= b: value function is infinite")
    s2 = sigma ** 2
    p = b - 0.5 * s2
    n = (-p + math.sqrt(p * p + 2 * s2 * r)) / s2
    a = n * K / (n - 1)
    x = np.asarray(x, dtype=float)
    below = (a - K) * np.exp(n * np.log(np.minimum(x, a) / a))
    return np.where(x < a, below, x - K)
