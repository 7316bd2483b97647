from __future__ import annotations

import numpy as np
import pytest

from skewgbm import DomainError
from skewgbm.special import (ExcessivePair, ScaleFunction, phi, phi_dminus, phi_dplus, psi, psi_d2,
                             psi_dminus, psi_dplus, scale, scale_density, scale_density_general,
                             scale_inverse)

from conftest import make_params

PARAMS = [make_params(-0.1, 1.0), make_params(-0.5, 1.6), make_params(0.3, 2.0), make_params(0.3, 7.25)]


@pytest.mark.parametrize("p", PARAMS)
def test_psi_branches(p):
    z = p.z
    assert psi(z, z, p) == pytest.approx(z ** p.n, rel=1e-14)
    x = 0.5 * z
    assert psi(x, z, p) == pytest.approx(x ** p.n, rel=1e-14)
    x = 2 * z
    assert psi(x, z, p) == pytest.approx(p.A * x ** p.n + p.B() * x ** p.m, rel=1e-13)


@pytest.mark.parametrize("p", PARAMS)
def test_psi_skew_condition(p):
    z = p.z
    lhs = (1 + p.beta) * psi_dplus(z, z, p)
    rhs = (1 - p.beta) * psi_dminus(z, z, p)
    assert lhs == pytest.approx(rhs, rel=1e-13)


@pytest.mark.parametrize("p", PARAMS)
def test_psi_increasing(p):
    x = np.geomspace(1e-3, 100, 2000)
    assert np.all(np.diff(psi(x, p.z, p)) > 0)


def test_psi_left_derivative_smaller_for_negative_beta():
    p = make_params(-0.1, 1.0)
    assert psi_dminus(1.0, 1.0, p) == pytest.approx(p.n)
    assert psi_dminus(1.0, 1.0, p) < psi_dplus(1.0, 1.0, p)


def test_psi_d2_undefined_at_z():
    p = make_params(-0.1, 1.0)
    assert np.isnan(psi_d2(1.0, 1.0, p))
    assert np.isfinite(psi_d2(1.0 + 1e-9, 1.0, p))


@pytest.mark.parametrize("p", PARAMS)
def test_phi(p):
    z = p.z
    assert phi(z * (1 - 1e-12), z, p) == pytest.approx(z ** p.m, rel=1e-9)
    assert phi(z, z, p) == pytest.approx(z ** p.m, rel=1e-14)
    assert (1 + p.beta) * phi_dplus(z, z, p) == pytest.approx((1 - p.beta) * phi_dminus(z, z, p), rel=1e-12)
    x = np.geomspace(1e-2, 100, 1000)
    assert np.all(np.diff(phi(x, z, p)) < 0)
    assert phi(1e8, z, p) == pytest.approx(1e8 ** p.m)


def test_phi_constants_negative_beta():
    p = make_params(-0.1, 1.0)
    pair = ExcessivePair.of(p)
    # continuity forces C z^-(n-m) = 1 - D, so D in (0, 1) goes with C > 0
    assert pair.phiC > 0 and 0 < pair.phiD < 1
    assert pair.phiC + pair.phiD == pytest.approx(1.0)
    assert pair.A > 1
    assert pair.A * 1 + pair.Bz * 1 == pytest.approx(1.0)
    assert ExcessivePair.of(make_params(0.3, 1.0)).A < 1


def test_nonpositive_x():
    p = make_params(-0.1, 1.0)
    with pytest.raises(DomainError):
        psi(0.0, 1.0, p)
    with pytest.raises(DomainError):
        phi(-1.0, 1.0, p)


@pytest.mark.parametrize("p", PARAMS)
def test_scale_jump(p):
    s = ScaleFunction.of(p)
    right = s.density(p.z, "right")
    left = s.density(p.z, "left")
    assert (1 + p.beta) * right == pytest.approx((1 - p.beta) * left, rel=1e-14)


@pytest.mark.parametrize("p", PARAMS)
def test_scale_monotone_and_inverse(p):
    x = np.geomspace(0.05, 20, 500)
    q = scale(x, p)
    assert np.all(np.diff(q) > 0)
    assert np.allclose(scale_inverse(q, p), x, rtol=1e-11)
    # derivative by central differences away from z
    h = 1e-6
    xs = x[np.abs(x - p.z) > 1e-3]
    num = (scale(xs + h, p) - scale(xs - h, p)) / (2 * h)
    assert np.allclose(num, scale_density(xs, p), rtol=1e-6)


@pytest.mark.parametrize("p", PARAMS)
def test_scale_general_matches_closed_form(p):
    ratio = lambda u: p.b / (p.sigma ** 2 * u)
    x = np.array([0.3, 0.9, p.z * 0.999, p.z, p.z * 1.5, 7.0])
    got = np.array([scale_density_general(xi, ratio, [(p.z, p.beta)], x1=1.0 if p.z != 1.0 else 0.5)
                    for xi in x])
    want = scale_density(x, p, x1=1.0 if p.z != 1.0 else 0.5)
    assert np.allclose(got, want, rtol=1e-10)


def test_scale_general_two_atoms():
    ratio = lambda u: 0.0
    atoms = [(1.0, 0.5), (2.0, -0.5)]
    d = scale_density_general(3.0, ratio, atoms, x1=0.5)
    assert d == pytest.approx((0.5 / 1.5) * (1.5 / 0.5))
    with pytest.raises(DomainError):
        scale_density_general(3.0, ratio, [(1.0, 0.2), (1.0, 0.3)])


def test_literal_phi_constant_breaks_continuity():
    # with 2 n beta in place of 2 m beta the two branches of phi do not meet at z
    p = make_params(-0.1, 1.0)
    m, n, beta = p.m, p.n, p.beta
    c_literal = 2 * n * beta / ((n - m) * (1 - beta))
    d = ExcessivePair.of(p).phiD
    assert c_literal + d == pytest.approx((1 + beta) / (1 - beta))
    assert abs(c_literal + d - 1) > 0.1
