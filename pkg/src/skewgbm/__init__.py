"""Perpetual American call on skew geometric Brownian motion."""

from .errors import (
    AssumptionViolated,
    BracketFailure,
    CaseMismatch,
    DegenerateBeta,
    DomainError,
    NonConvergence,
    SkewGbmError,
)
from .model import Case, CaseProfile, SkewGbmParams, characteristic_roots, classical_perpetual_call, classify
from .value import PiecewiseValueFunction, Regime, StoppingRegion, smooth_fit_gap, solve, stopping_rule

__version__ = "0.1.0"
