"""Monte Carlo for skew GBM and for first-entry stopping rules.

Y = ln X is a Brownian motion with drift b - sigma^2/2 and volatility sigma,
skewed at ln z with the same beta.  Two step schemes are available:

``bridge``
    Take a free Gaussian step.  If the Brownian bridge between the two
    endpoints touches ln z (it crosses, or it does so with probability
    exp(-2 d0 d1 / (sigma^2 dt)) while staying on one side), keep the
    distance to the level and choose the side afresh: above with probability
    (1 + beta) / 2.  This is exact for driftless skew Brownian motion.

``euler``
    Euler steps of Z = S(Y) where S is piecewise linear with slope 1 + beta
    below ln z and 1 - beta above, so Z has no local-time term.  The
    coefficient is frozen at the left end of the step; the scheme carries
    an O(sqrt(dt)) bias at the interface.

Entry into the stopping region is monitored continuously via the same
bridge probabilities, so that an isolated stopping point can be hit; the
path is stopped at the level it reached.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numba
import numpy as np

from ..errors import DomainError
from ..model import SkewGbmParams, classify
from ..special import psi

SCHEMES = {"bridge": 0, "euler": 1}
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class McConfig:
    paths: int = 100_000
    dt: float | None = None  # defaults to 1e-4 / r
    horizon: float | None = None  # defaults to ln(1e4) / r
    seed: int = 12345
    antithetic: bool = True
    scheme: str = "bridge"

    def __post_init__(self):
        if self.paths < 2:
            raise DomainError("need at least two paths")
        if self.antithetic and self.paths % 2:
            raise DomainError("antithetic sampling needs an even path count")
        if self.dt is not None and not self.dt > 0:
            raise DomainError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}")

    def resolve(self, params) -> tuple[float, float]:
        dt = 1e-4 / params.r if self.dt is None else self.dt
        horizon = math.log(1e4) / params.r if self.horizon is None else self.horizon
        if math.exp(-params.r * horizon) > 1e-4 * (1 + 1e-12):
            raise DomainError("horizon too short: exp(-r T) must not exceed 1e-4")
        return dt, horizon


@dataclass
class McResult:
    mean: float
    se: float
    paths: int
    dt: float
    horizon: float
    seed: int
    x0: float
    scheme: str
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "se": self.se,
            "paths": self.paths,
            "dt": self.dt,
            "horizon": self.horizon,
            "seed": self.seed,
            "x0": self.x0,
            "scheme": self.scheme,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream of path (pair) ``index`` under ``seed``."""
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, index & _MASK64]))


# --------------------------------------------------------------------------
# kernels
#
# Random numbers are generated by numpy in blocks and handed to the kernels,
# which consume uniforms only when an event is genuinely random.  Helpers
# take scalars only; passing arrays into nested calls is slow in numba.
# --------------------------------------------------------------------------


_NO_TOUCH = 40.0  # exp(-40) ~ 4e-18: below this the bridge cannot touch
_UNIFORMS_PER_STEP = 9  # worst case for a pair, including the roulette draw


@numba.njit(cache=True)
def _touch_prob(d0, d1, var):
    """Probability that a Brownian bridge from level + d0 to level + d1
    touches the level."""
    if d0 == 0.0 or d0 * d1 <= 0.0:
        return 1.0
    arg = 2.0 * d0 * d1 / var
    if arg > _NO_TOUCH:
        return 0.0
    return math.exp(-arg)


@numba.njit(cache=True)
def _propose(y, ell, drift, sq, beta, scheme, xi):
    """Free Gaussian step (bridge) or the Euler step of S(Y) mapped back."""
    if scheme == 0:
        return y + drift + sq * xi
    c = 1.0 + beta if y < ell else 1.0 - beta
    zz = c * (y - ell) + c * (drift + sq * xi)
    return ell + zz / (1.0 + beta) if zz < 0.0 else ell + zz / (1.0 - beta)


@numba.njit(cache=True)
def _simulate(y0, ell, drift, sq, var, p_up, beta, scheme, normals, unif):
    out = np.empty(normals.size + 1)
    out[0] = y0
    y = y0
    iu = 0
    for k in range(normals.size):
        yn = _propose(y, ell, drift, sq, beta, scheme, normals[k])
        if scheme == 0:
            p = _touch_prob(y - ell, yn - ell, var)
            touched = p >= 1.0
            if 0.0 < p < 1.0:
                touched = unif[iu] < p
                iu += 1
            if touched:
                mag = abs(yn - ell)
                yn = ell + mag if unif[iu] < p_up else ell - mag
                iu += 1
        y = yn
        out[k + 1] = y
    return out


@numba.njit(cache=True)
def _log_psi(y, ell, n, m, A, Bu):
    if y < ell:
        return n * y
    return n * y + math.log(A + Bu * math.exp((n - m) * (ell - y)))


ROULETTE_EVERY = 32  # steps between roulette checks

# layout of the resumable pair state
_Y, _W, _V, _CUT = 0, 2, 4, 6
_T = 8
_G, _ALIVE = 0, 2
_K = 4


@numba.njit(cache=True)
def _advance_pair(fs, ist, normals, unif, ell, drift, sq, var, r, K, dt, nsteps, p_up, beta,
                  scheme, comp_lo, comp_hi, log_bound, n, m, A, Bu, npath):
    """Advance a path and (optionally) its antithetic twin in lockstep on
    shared normals, until both are finished or a block runs out.

    Each path carries the bound  log c + log psi(Y) - r t  on its remaining
    value.  Whenever the bound has fallen below half of its level at the
    last survival, the path survives with probability 1/2 and doubles its
    weight (Russian roulette), which keeps the estimator unbiased.  Returns
    True when finished.
    """
    ln2 = math.log(2.0)
    iu = 0
    limit = unif.size - _UNIFORMS_PER_STEP
    t = fs[_T]
    k = ist[_K]
    for ix in range(normals.size):
        if (ist[_ALIVE] == 0 and ist[_ALIVE + 1] == 0) or k >= nsteps or iu > limit:
            break
        xi = normals[ix]
        for j in range(npath):
            if ist[_ALIVE + j] == 0:
                continue
            y = fs[_Y + j]
            yn = _propose(y, ell, drift, sq, beta, scheme, xi if j == 0 else -xi)
            p = _touch_prob(y - ell, yn - ell, var)
            touched = p >= 1.0
            if 0.0 < p < 1.0:
                touched = unif[iu] < p
                iu += 1
            if touched and scheme == 0:
                mag = abs(yn - ell)
                yn = ell + mag if unif[iu] < p_up else ell - mag
                iu += 1
            g = ist[_G + j]
            up = comp_lo[g]
            if up == ell:
                hit_up = touched
            else:
                p = _touch_prob(y - up, yn - up, var)
                hit_up = p >= 1.0
                if 0.0 < p < 1.0:
                    hit_up = unif[iu] < p
                    iu += 1
            hit_dn = False
            dn = -np.inf
            if g > 0:
                dn = comp_hi[g - 1]
                if dn == ell:
                    hit_dn = touched
                else:
                    p = _touch_prob(y - dn, yn - dn, var)
                    hit_dn = p >= 1.0
                    if 0.0 < p < 1.0:
                        hit_dn = unif[iu] < p
                        iu += 1
            if hit_up or hit_dn:
                if hit_up and hit_dn:
                    level = up if up - y <= y - dn else dn
                else:
                    level = up if hit_up else dn
                fs[_V + j] = fs[_W + j] * max(math.exp(level) - K, 0.0) * math.exp(-r * (t + 0.5 * dt))
                ist[_ALIVE + j] = 0
            else:
                fs[_Y + j] = yn
        t += dt
        k += 1
        if k % ROULETTE_EVERY == 0:
            for j in range(npath):
                if ist[_ALIVE + j] == 0:
                    continue
                bound = log_bound + _log_psi(fs[_Y + j], ell, n, m, A, Bu) - r * t
                if bound < fs[_CUT + j]:
                    # one draw per check keeps the uniform budget bounded
                    if unif[iu] < 0.5:
                        fs[_W + j] *= 2.0
                        fs[_CUT + j] = bound - ln2
                    else:
                        ist[_ALIVE + j] = 0
                    iu += 1
    fs[_T] = t
    ist[_K] = k
    return (ist[_ALIVE] == 0 and ist[_ALIVE + 1] == 0) or k >= nsteps


@numba.njit(cache=True)
def _sign_counts(y0, ell, drift, sq, var, every, p_up, beta, scheme, normals, unif):
    """Samples taken after the first touch of ln z, and how many lie above."""
    y = y0
    hit = y0 == ell
    taken = 0
    above = 0
    iu = 0
    for k in range(normals.size):
        yn = _propose(y, ell, drift, sq, beta, scheme, normals[k])
        p = _touch_prob(y - ell, yn - ell, var)
        touched = p >= 1.0
        if 0.0 < p < 1.0:
            touched = unif[iu] < p
            iu += 1
        if touched and scheme == 0:
            mag = abs(yn - ell)
            yn = ell + mag if unif[iu] < p_up else ell - mag
            iu += 1
        y = yn
        hit = hit or touched
        if hit and (k + 1) % every == 0:
            taken += 1
            if y > ell:
                above += 1
    return taken, above


# --------------------------------------------------------------------------
# public interface
# --------------------------------------------------------------------------


def _log_coeffs(params):
    s2 = params.sigma ** 2
    return math.log(params.z), params.b - 0.5 * s2, (1.0 + params.beta) / 2.0


def _nsteps(horizon, dt):
    return int(math.ceil(horizon / dt - 1e-9))


def simulate_path(params: SkewGbmParams, dt, horizon, rng_stream, x0=None, scheme="bridge") -> np.ndarray:
    """X sampled at the step boundaries 0, dt, ..., up to ``horizon``.

    ``rng_stream`` is a numpy Generator supplying the normals and uniforms.
    """
    if not dt > 0 or not horizon > 0:
        raise DomainError("dt and horizon must be positive")
    ell, drift, p_up = _log_coeffs(params)
    x0 = params.z if x0 is None else x0
    nsteps = _nsteps(horizon, dt)
    normals = rng_stream.standard_normal(nsteps)
    unif = rng_stream.random(2 * nsteps)
    sig = params.sigma
    y = _simulate(math.log(x0), ell, drift * dt, sig * math.sqrt(dt), sig * sig * dt, p_up,
                  params.beta, SCHEMES[scheme], normals, unif)
    return np.exp(y)


def payoff_bound(params) -> float:
    """sup (x - K)^+ / psi(x; z), so that c psi dominates the value."""
    K = params.K
    x = np.geomspace(K, 1e3 * max(K, params.z), 200_001)[1:]
    ratio = (x - K) / psi(x, params.z, params)
    i = int(np.argmax(ratio))
    # refine around the grid maximum
    xf = np.linspace(x[max(i - 1, 0)], x[min(i + 1, x.size - 1)], 2001)
    return float(np.max((xf - K) / psi(xf, params.z, params)))


FIRST_BLOCK = 256
MAX_BLOCK = 16384


def _pair_value(gen, y0, consts, npath):
    """Run one pair from a fresh stream; returns the (averaged) payoff."""
    (ell, drift, sq, var, r, K, dt, nsteps, p_up, beta, scheme,
     comp_lo, comp_hi, log_bound, n, m, A, Bu) = consts
    fs = np.zeros(9)
    ist = np.zeros(5, dtype=np.int64)
    start_bound = log_bound + float(_log_psi(y0, ell, n, m, A, Bu))
    g = int(np.searchsorted(comp_lo, y0, side="right"))
    for j in range(npath):
        fs[_Y + j] = y0
        fs[_W + j] = 1.0
        fs[_CUT + j] = start_bound - math.log(2.0)
        ist[_G + j] = g
        ist[_ALIVE + j] = 1
    for lo, hi in zip(comp_lo, comp_hi):
        if lo <= y0 <= hi:
            return max(math.exp(y0) - K, 0.0)
    block = FIRST_BLOCK
    while True:
        normals = gen.standard_normal(block)
        # uniforms are needed only near a level; running short just ends the block
        unif = gen.random(block // 8 + 4 * _UNIFORMS_PER_STEP)
        done = _advance_pair(fs, ist, normals, unif, ell, drift, sq, var, r, K, dt, nsteps, p_up,
                             beta, scheme, comp_lo, comp_hi, log_bound, n, m, A, Bu, npath)
        if done:
            return float(fs[_V:_V + npath].mean())
        block = min(2 * block, MAX_BLOCK)


def mc_estimate(params: SkewGbmParams, region, cfg: McConfig = McConfig(), x0=None) -> McResult:
    """E[e^{-r tau} (X_tau - K)^+] for tau the first entry into ``region``."""
    x0 = params.K if x0 is None else float(x0)
    if not x0 > 0:
        raise DomainError("x0 must be positive")
    prof = classify(params)
    dt, horizon = cfg.resolve(params)
    if region.contains(x0):
        # tau = 0 on every path
        return McResult(max(x0 - params.K, 0.0), 0.0, cfg.paths, dt, horizon, cfg.seed, x0, cfg.scheme)
    ell, drift, p_up = _log_coeffs(params)
    sig = params.sigma
    consts = (
        ell, drift * dt, sig * math.sqrt(dt), sig * sig * dt, params.r, params.K, dt,
        _nsteps(horizon, dt), p_up, params.beta, SCHEMES[cfg.scheme],
        np.array([math.log(lo) for lo, _ in region.components]),
        np.array([math.log(hi) if math.isfinite(hi) else np.inf for _, hi in region.components]),
        math.log(payoff_bound(params) * 1.001), prof.n, prof.m, params.A, params.B_unit,
    )
    npath = 2 if cfg.antithetic else 1
    count = cfg.paths // npath
    y0 = math.log(x0)
    start = time.perf_counter()
    values = np.array([_pair_value(stream(cfg.seed, i), y0, consts, npath) for i in range(count)])
    seconds = time.perf_counter() - start
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(count))
    return McResult(mean, se, cfg.paths, dt, horizon, cfg.seed, x0, cfg.scheme, seconds)


@dataclass
class SignStatistic:
    fraction: float
    se: float
    samples: int
    paths: int


def skew_sign_statistic(params, dt, horizon, paths, every=1, x0=None, seed=0, scheme="bridge") -> SignStatistic:
    """Fraction of time samples above ln z after the first touch.

    The standard error treats each path as a cluster (ratio estimator), so
    the correlation between samples of one path is accounted for.
    """
    ell, drift, p_up = _log_coeffs(params)
    x0 = params.z if x0 is None else x0
    nsteps = _nsteps(horizon, dt)
    sig = params.sigma
    taken = np.zeros(paths)
    above = np.zeros(paths)
    for i in range(paths):
        gen = stream(seed, i)
        normals = gen.standard_normal(nsteps)
        unif = gen.random(2 * nsteps)
        taken[i], above[i] = _sign_counts(math.log(x0), ell, drift * dt, sig * math.sqrt(dt), sig * sig * dt,
                                          every, p_up, params.beta, SCHEMES[scheme], normals, unif)
    total = int(taken.sum())
    if total == 0:
        raise DomainError("no path touched the skew level")
    frac = above.sum() / total
    resid = above - frac * taken
    mean_taken = total / paths
    se = math.sqrt(np.sum(resid ** 2) / (paths * (paths - 1))) / mean_taken
    return SignStatistic(float(frac), float(se), total, paths)
