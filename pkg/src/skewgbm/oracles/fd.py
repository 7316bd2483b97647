"""Finite-difference obstacle solver for the skew GBM perpetual call.

Works in y = ln x on a uniform grid with ln z on a node.  Away from z the
rows are the usual three-point discretisation of

    sigma^2 v'' / 2 + (b - sigma^2 / 2) v' - r v,

and the row at ln z enforces the skew interface condition.  The discrete
complementarity problem  min{-L v, v - payoff} = 0  is solved either by
policy iteration (Howard) with a tridiagonal solve per step, or by projected
SOR.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.linalg import solve_banded

from ..errors import DomainError, NonConvergence
from ..model import SkewGbmParams, classify

CSV_VERSION = "skewgbm-fd/1"


@dataclass(frozen=True)
class FdConfig:
    nodes: int = 4000
    x_lo: float | None = None  # defaults to 1e-3 K
    x_hi: float | None = None  # defaults to max(10 z0, 4 z)
    interface: str = "simple"  # "simple" or "flux"
    lower_bc: str = "power"  # "power" (v ~ c x^n) or "dirichlet" (v = 0)
    method: str = "policy"  # "policy" or "psor"
    omega: float = 1.6
    tol: float = 1e-10
    max_sweeps: int = 200_000

    def __post_init__(self):
        if self.nodes < 500:
            raise DomainError("at least 500 nodes are required")
        if not 1.0 < self.omega < 2.0:
            raise DomainError("omega must lie in (1, 2)")
        if self.interface not in ("simple", "flux"):
            raise DomainError(f"unknown interface row {self.interface!r}")
        if self.lower_bc not in ("power", "dirichlet"):
            raise DomainError(f"unknown lower boundary condition {self.lower_bc!r}")
        if self.method not in ("policy", "psor"):
            raise DomainError(f"unknown method {self.method!r}")

    def domain(self, params) -> tuple[float, float]:
        z0 = classify(params).z0
        lo = 1e-3 * params.K if self.x_lo is None else self.x_lo
        hi = max(10.0 * z0, 4.0 * params.z) if self.x_hi is None else self.x_hi
        return lo, hi


@dataclass
class FdResult:
    params: SkewGbmParams
    y: np.ndarray
    v: np.ndarray
    active: np.ndarray  # nodes where v equals the payoff
    interface_index: int
    iterations: int
    residual: float

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.y)

    @property
    def h(self) -> float:
        return float(self.y[1] - self.y[0])

    def active_components(self) -> list[tuple[float, float]]:
        """Maximal runs of active interior nodes as (x_first, x_last)."""
        act = self.active.copy()
        act[0] = act[-1] = False
        comps = []
        j, n = 0, act.size
        while j < n:
            if act[j]:
                k = j
                while k + 1 < n and act[k + 1]:
                    k += 1
                comps.append((float(math.exp(self.y[j])), float(math.exp(self.y[k]))))
                j = k + 1
            else:
                j += 1
        # the right end carries the payoff, so a run reaching it is the ray
        if comps and comps[-1][1] == float(math.exp(self.y[-2])):
            comps[-1] = (comps[-1][0], math.inf)
        return comps

    def compare(self, vf) -> np.ndarray:
        """Columns x, v_fd, v_analytic, diff."""
        x = self.x
        va = vf.evaluate(x)
        return np.column_stack([x, self.v, va, self.v - va])

    def relative_error(self, vf) -> float:
        """max |v_fd - v| / max(v, K) over the grid."""
        table = self.compare(vf)
        scale = np.maximum(table[:, 2], self.params.K)
        return float(np.max(np.abs(table[:, 3]) / scale))

    def to_csv(self, vf) -> str:
        buf = io.StringIO()
        buf.write(f"# {CSV_VERSION} nodes={self.y.size} h={self.h!r} iterations={self.iterations}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "v_fd", "v_analytic", "diff", "active"])
        for row, act in zip(self.compare(vf), self.active):
            w.writerow([repr(float(c)) for c in row] + [int(act)])
        return buf.getvalue()


def log_grid(params, cfg: FdConfig) -> tuple[np.ndarray, int]:
    """Uniform grid in ln x, shifted so that ln z is a node."""
    lo, hi = cfg.domain(params)
    ell = math.log(params.z)
    y_lo, y_hi = math.log(lo), math.log(hi)
    if not y_lo < ell < y_hi:
        raise DomainError("ln z must lie strictly inside the grid")
    h = (y_hi - y_lo) / (cfg.nodes - 1)
    j = int(round((ell - y_lo) / h))
    j = min(max(j, 1), cfg.nodes - 2)
    y = ell + h * (np.arange(cfg.nodes) - j)
    return y, j


def assemble(params, y, jz, interface="simple", lower_bc="power"):
    """Tridiagonal rows (sub, diag, sup) of -L and the payoff.

    Interior rows use the conservative form of the generator,
    e^{-k y} (e^{k y} v')' sigma^2 / 2 with k = 2 (b - sigma^2/2) / sigma^2,
    which is monotone for any step.  The interface row either takes the
    one-sided differences weighted by 1 +/- beta ("simple"), or keeps the
    conservative form with flux weights 1 - beta below and 1 + beta above
    ("flux").

    At the left end either v = 0, or v_0 = e^{-n h} v_1, which every
    multiple of x^n satisfies exactly.
    """
    s2 = params.sigma ** 2
    mu = params.b - 0.5 * s2
    kappa = 2.0 * mu / s2
    r, beta = params.r, params.beta
    h = y[1] - y[0]
    N = y.size
    half = 0.5 * s2 / (h * h)
    # flux weights at the cell faces, relative to the node
    wp = math.exp(0.5 * kappa * h)
    wm = math.exp(-0.5 * kappa * h)
    lower = np.full(N, -half * wm)
    upper = np.full(N, -half * wp)
    diag = np.full(N, half * (wp + wm) + r)

    if interface == "simple":
        lower[jz] = -(1.0 - beta)
        upper[jz] = -(1.0 + beta)
        diag[jz] = 2.0
    else:
        cm, cp = 1.0 - beta, 1.0 + beta
        mass = 0.5 * (cm * math.exp(-0.25 * kappa * h) + cp * math.exp(0.25 * kappa * h))
        lower[jz] = -half * cm * wm / mass
        upper[jz] = -half * cp * wp / mass
        diag[jz] = half * (cm * wm + cp * wp) / mass + r

    lower[0] = upper[0] = 0.0
    diag[0] = 1.0
    if lower_bc == "power":
        upper[0] = -math.exp(-params.n * h)
    lower[-1] = upper[-1] = 0.0
    diag[-1] = 1.0
    payoff = np.maximum(np.exp(y) - params.K, 0.0)
    rhs = np.zeros(N)
    rhs[-1] = payoff[-1]
    return lower, diag, upper, payoff, rhs


def _matvec(lower, diag, upper, v):
    out = diag * v
    out[1:] += lower[1:] * v[:-1]
    out[:-1] += upper[:-1] * v[1:]
    return out


def _policy_iteration(lower, diag, upper, payoff, rhs, cfg):
    N = diag.size
    obstacle = np.zeros(N, dtype=bool)
    for it in range(1, N + 2):
        ab = np.zeros((3, N))
        ab[0, 1:] = np.where(obstacle[:-1], 0.0, upper[:-1])
        ab[1] = np.where(obstacle, 1.0, diag)
        ab[2, :-1] = np.where(obstacle[1:], 0.0, lower[1:])
        b = np.where(obstacle, payoff, rhs)
        v = solve_banded((1, 1), ab, b)
        resid = _matvec(lower, diag, upper, v) - rhs
        new = (v - payoff) < resid
        new[0] = new[-1] = False
        if np.array_equal(new, obstacle):
            v[obstacle] = payoff[obstacle]
            return v, obstacle, it
        obstacle = new
    raise NonConvergence("policy iteration did not settle", math.nan, it)


@numba.njit(cache=True)
def _psor(lower, diag, upper, payoff, v, omega, tol, max_sweeps):
    N = v.size
    for sweep in range(1, max_sweeps + 1):
        err = 0.0
        v[0] = -upper[0] * v[1] / diag[0]
        for j in range(1, N - 1):
            gs = -(lower[j] * v[j - 1] + upper[j] * v[j + 1]) / diag[j]
            new = v[j] + omega * (gs - v[j])
            if new < payoff[j]:
                new = payoff[j]
            d = abs(new - v[j])
            if d > err:
                err = d
            v[j] = new
        if err < tol:
            return sweep, err
    return max_sweeps, err


def lcp_residual(lower, diag, upper, payoff, rhs, v) -> float:
    """max |min(-L v, v - payoff)| over interior nodes, rows scaled by
    their diagonal so that the residual is in units of value."""
    resid = (_matvec(lower, diag, upper, v) - rhs) / diag
    return float(np.max(np.abs(np.minimum(resid, v - payoff))[1:-1]))


def fd_solve(params: SkewGbmParams, cfg: FdConfig = FdConfig()) -> FdResult:
    classify(params)  # rejects r <= b
    y, jz = log_grid(params, cfg)
    lower, diag, upper, payoff, rhs = assemble(params, y, jz, cfg.interface, cfg.lower_bc)
    if cfg.method == "policy":
        v, active, iterations = _policy_iteration(lower, diag, upper, payoff, rhs, cfg)
    else:
        v = payoff.copy()
        v[0] = rhs[0]
        iterations, err = _psor(lower, diag, upper, payoff, v, cfg.omega, cfg.tol, cfg.max_sweeps)
        if err >= cfg.tol:
            raise NonConvergence(
                f"PSOR stopped after {iterations} sweeps", lcp_residual(lower, diag, upper, payoff, rhs, v), iterations
            )
        # projection writes the payoff verbatim on active nodes
        active = v == payoff
    residual = lcp_residual(lower, diag, upper, payoff, rhs, v)
    active = active & (payoff > 0)
    return FdResult(params, y, v, active, jz, iterations, residual)
