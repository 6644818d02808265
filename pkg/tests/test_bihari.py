import math

import numpy as np
import pytest
from scipy.integrate import quad
from hypothesis import given, strategies as st

from nsfde.bihari import (
    affine,
    bihari_G,
    bihari_G_inverse,
    bihari_bound,
    by_name,
    gronwall_bound,
    is_midpoint_concave,
    is_nondecreasing,
    linear,
    log_splice,
    modulus_check,
    osgood_at_infinity,
    power,
    registry,
)
from nsfde.errors import DomainError
from nsfde.fbm_core import TimeGrid
from nsfde.sfde.hypotheses import rk4_modulus

GRID = TimeGrid(1.0, 50)


def test_gronwall_constant_data():
    out = gronwall_bound(np.full(51, 2.0), np.full(51, 3.0), GRID)
    np.testing.assert_allclose(out, 2.0 * np.exp(3.0 * GRID.nodes), rtol=1e-14)


def test_gronwall_uses_running_max_of_h():
    h = np.where(GRID.nodes < 0.5, 1.0, 0.0)
    out = gronwall_bound(h, np.zeros(51), GRID)
    assert np.all(out == 1.0)


def test_gronwall_rejects_negative_data():
    with pytest.raises(DomainError):
        gronwall_bound(-np.ones(51), np.ones(51), GRID)


@given(st.floats(1e-3, 10.0), st.floats(0.0, 5.0), st.floats(1e-3, 100.0))
def test_linear_bihari_is_gronwall(h0, lam, x0):
    h = np.full(51, h0)
    lam_c = np.full(51, lam)
    b = bihari_bound(h, lam_c, linear(1.0), x0, GRID)
    np.testing.assert_allclose(b, gronwall_bound(h, lam_c, GRID), rtol=1e-8)


@given(st.floats(1e-2, 10.0), st.floats(1e-2, 10.0))
def test_bound_independent_of_x0(x0, x1):
    h = np.linspace(0.01, 0.2, 51)
    lam = np.full(51, 2.0)
    rho = log_splice(0.1)
    np.testing.assert_allclose(bihari_bound(h, lam, rho, x0, GRID), bihari_bound(h, lam, rho, x1, GRID), rtol=1e-7)


@pytest.mark.parametrize("rho", [log_splice(0.1), log_splice(0.3, 2.0), affine(0.5, 1.0), power(0.5)])
def test_bihari_matches_ode_oracle(rho):
    # with constant h the bound is the maximal solution of z' = lam rho(z), z(0) = h
    h0, lam = 0.05, 1.5
    b = bihari_bound(np.full(51, h0), np.full(51, lam), rho, 1.0, GRID)
    z = rk4_modulus(rho, h0, lam, 1.0, 50, substeps=40)
    np.testing.assert_allclose(b, z, rtol=1e-7)


def test_loglog_closed_form():
    # z' = lam z log(1/z) has z(t) = z0^{exp(-lam t)} while z stays below delta
    z0, lam = 1e-6, 0.5
    b = bihari_bound(np.full(51, z0), np.full(51, lam), log_splice(0.3), 1.0, GRID)
    want = z0 ** np.exp(-lam * GRID.nodes)
    assert want[-1] < 0.3
    np.testing.assert_allclose(b, want, rtol=1e-8)


@pytest.mark.parametrize("rho", [linear(2.0), affine(0.5, 3.0), affine(2.0, 0.0), power(0.3, 2.0), log_splice(0.1), log_splice(0.2, 5.0)])
@pytest.mark.parametrize("x", [1e-9, 0.05, 0.1, 0.7, 40.0])
def test_G_against_quadrature(rho, x):
    # in the variable log y the integrand is smooth apart from the splice kink
    kinks = [math.log(p) for p in rho.params[:1] if rho.kind == "log_splice"]
    lo, hi = sorted((0.0, math.log(x)))
    val, _ = quad(lambda s: math.exp(s) / float(rho(math.exp(s))), lo, hi,
                  points=[k for k in kinks if lo < k < hi] or None, epsabs=0.0, epsrel=1e-13, limit=400)
    want = val if x >= 1.0 else -val
    assert bihari_G(x, rho, 1.0) == pytest.approx(want, rel=1e-10, abs=1e-13)


def test_G_at_zero():
    assert bihari_G(0.0, log_splice(0.1), 1.0) == -math.inf
    assert bihari_G(0.0, linear(1.0), 1.0) == -math.inf
    assert bihari_G(0.0, power(0.5), 1.0) == pytest.approx(-2.0)
    assert bihari_G_inverse(-math.inf, log_splice(0.1), 1.0) == 0.0


@pytest.mark.parametrize("rho", [log_splice(0.1), affine(1.0, 2.0), power(0.5), linear(0.5)])
@given(x=st.floats(1e-8, 1e3))
def test_inverse_identity(rho, x):
    y = bihari_G(x, rho, 1.0)
    assert bihari_G_inverse(y, rho, 1.0) == pytest.approx(x, rel=1e-9)


def test_zero_h_with_osgood_modulus_gives_zero():
    b = bihari_bound(np.zeros(51), np.full(51, 5.0), log_splice(0.1), 1.0, GRID)
    assert np.all(b == 0.0)


def test_overflow_is_reported_as_infinity():
    b = bihari_bound(np.ones(51), np.full(51, 1000.0), linear(1.0), 1.0, GRID)
    assert b[0] == 1.0 and math.isinf(b[-1])


def test_vanishing_modulus_is_refused():
    with pytest.raises(DomainError):
        bihari_G(2.0, linear(0.0), 1.0)
    with pytest.raises(DomainError):
        bihari_G(2.0, linear(1.0), 0.0)
    with pytest.raises(DomainError):
        bihari_bound(np.ones(51), -np.ones(51), linear(1.0), 1.0, GRID)


@given(st.lists(st.floats(0.0, 1.0), min_size=51, max_size=51), st.floats(0.0, 3.0))
def test_bound_dominates_h_and_is_monotone(h, lam):
    h = np.array(h)
    b = bihari_bound(h, np.full(51, lam), log_splice(0.1), 1.0, GRID)
    assert np.all(b >= np.maximum.accumulate(h) * (1 - 1e-9))
    assert np.all(np.diff(b) >= -1e-9 * b[1:])


@pytest.mark.parametrize("name", sorted(registry()))
def test_registry_moduli_are_concave_nondecreasing(name):
    rho = by_name(name)
    assert is_nondecreasing(rho) and is_midpoint_concave(rho)


def test_lattice_checks_detect_failures():
    assert not is_midpoint_concave(lambda u: u**2)
    assert not is_nondecreasing(lambda u: -u)


def test_by_name_unknown():
    with pytest.raises(DomainError):
        by_name("cubic")


@pytest.mark.parametrize("bad", [lambda: linear(-1), lambda: affine(-1, 0), lambda: power(1.0), lambda: log_splice(0.5)])
def test_constructor_domains(bad):
    with pytest.raises(DomainError):
        bad()


def test_moduli_reject_negative_argument():
    with pytest.raises(DomainError):
        linear(1.0)(-1.0)


def test_log_splice_is_continuous_with_positive_tail_slope():
    rho = log_splice(0.1, 2.0)
    d = 0.1
    assert float(rho(d)) == pytest.approx(2.0 * d * math.log(1 / d), rel=1e-15)
    assert float(rho(d + 1.0)) - float(rho(d)) == pytest.approx(2.0 * (math.log(1 / d) - 1), rel=1e-12)


@pytest.mark.parametrize("name,ok", [("linear", True), ("log_splice", True), ("power", False), ("affine", False)])
def test_modulus_check_verdicts(name, ok):
    assert modulus_check(by_name(name)).passed is ok


def test_power_modulus_integral_converges():
    check = modulus_check(power(0.5))
    # int_eps^1 y^{-1/2} = 2 - 2 sqrt(eps)
    assert check.integrals[-1] == pytest.approx(2 - 2e-5, rel=1e-9)
    assert not check.divergent


def test_scaled_stays_in_family():
    for rho in registry().values():
        s = rho.scaled(3.0)
        assert s.kind == rho.kind
        np.testing.assert_allclose(s(np.array([0.0, 0.05, 2.0])), 3.0 * rho(np.array([0.0, 0.05, 2.0])))


@pytest.mark.parametrize("name", sorted(registry()))
def test_every_concave_modulus_is_osgood_at_infinity(name):
    # concave moduli grow at most linearly, so int^inf du / rho always diverges
    _, divergent = osgood_at_infinity(by_name(name))
    assert divergent
