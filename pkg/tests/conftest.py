from __future__ import annotations

import json
from pathlib import Path

import pytest

from skewgbm import SkewGbmParams

DATA = Path(__file__).parent / "data"

BASE = dict(r=0.1, b=0.05, sigma=0.3, K=1.0)

# one parameter set per qualitative regime: (beta, z, expected regime)
REGIME_SETS = {
    "fig4": (-0.1, 1.0, "OneSidedAlpha"),
    "fig5": (-0.1, 2.8, "OneSidedAtZ"),
    "fig6": (-0.1, 4.5, "OneSidedZ0"),
    "fig7": (-0.5, 0.9, "OneSidedAlpha"),
    "fig8": (-0.5, 2.5, "OneSidedAtZ"),
    "fig9": (-0.5, 4.5, "OneSidedZ0"),
    "fig10_12": (0.3, 2.0, "OneSidedAlpha"),
    "fig11": (-0.5, 1.6, "PointPlusRay"),
    "fig13": (0.3, 7.25, "TwoIntervals"),
}


def make_params(beta, z, **kw) -> SkewGbmParams:
    values = dict(BASE, beta=beta, z=z)
    values.update(kw)
    return SkewGbmParams(**values)


def regime_params(name) -> SkewGbmParams:
    beta, z, _ = REGIME_SETS[name]
    return make_params(beta, z)


@pytest.fixture(scope="session")
def frozen():
    return json.loads((DATA / "frozen_oracle.json").read_text())


@pytest.fixture(params=sorted(REGIME_SETS))
def regime_name(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
