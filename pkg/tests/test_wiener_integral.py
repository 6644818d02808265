import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import dblquad

from nsfde.errors import ContractError, DomainError
from nsfde.fbm_core import TimeGrid, covariance_rh
from nsfde.hilbert import TraceClassQ, sample_qfbm
from nsfde.verify import abs_norm_sweep
from nsfde.wiener_integral import (
    DeterministicIntegrand,
    ScalarTestFunction,
    cell_gram,
    dk_dr,
    integrate_wiener,
    khstar_apply,
    abs_norm_bound,
    wiener_bound_certify,
    norm_abs_h,
    random_test_function,
    scalar_product_h,
    transfer_second_moment,
    wiener_second_moment,
)

hursts = st.floats(0.51, 0.99)
unit = st.floats(0.0, 1.0)


def test_test_function_validation():
    with pytest.raises(ContractError):
        ScalarTestFunction(np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    with pytest.raises(DomainError):
        ScalarTestFunction(np.array([0.1, 1.0]), np.array([1.0]))
    f = ScalarTestFunction(np.array([0.0, 0.5, 1.0]), np.array([2.0, -1.0]))
    assert f(0.25) == 2.0 and f(0.5) == -1.0 and f(1.0) == -1.0
    assert f.l2_sq() == pytest.approx(2.5)


@given(unit, unit, hursts)
def test_indicators_reproduce_covariance(s, t, h):
    phi = ScalarTestFunction.indicator(0.0, s, 1.0)
    psi = ScalarTestFunction.indicator(0.0, t, 1.0)
    assert scalar_product_h(phi, psi, h) == pytest.approx(covariance_rh(s, t, h), abs=1e-13)


@given(st.floats(0.05, 1.0), hursts)
def test_indicator_norm_is_variance(t, h):
    assert norm_abs_h(ScalarTestFunction.indicator(0.0, t, 1.0), h) == pytest.approx(t ** (2 * h), rel=1e-12)


@pytest.mark.parametrize("cells", [((0.0, 0.3), (0.5, 0.9)), ((0.1, 0.2), (0.7, 1.0))])
def test_cell_gram_against_double_quadrature(cells):
    (a, b), (c, d) = cells
    h = 0.7
    edges = np.array([0.0, a, b, c, d]) if a > 0 else np.array([a, b, c, d])
    w = cell_gram(np.unique(np.concatenate([[0.0], edges])), h)
    idx = list(np.unique(np.concatenate([[0.0], edges]))).index
    val, _ = dblquad(lambda s, t: h * (2 * h - 1) * abs(t - s) ** (2 * h - 2), a, b, c, d, epsrel=1e-12)
    assert w[idx(a), idx(c)] == pytest.approx(val, rel=1e-9)


def test_cell_gram_diagonal():
    w = cell_gram(np.array([0.0, 0.25, 1.0]), 0.8)
    np.testing.assert_allclose(np.diag(w), [0.25**1.6, 0.75**1.6], rtol=1e-14)
    assert np.array_equal(w, w.T)


def test_different_intervals_refused():
    with pytest.raises(ContractError):
        scalar_product_h(ScalarTestFunction.indicator(0, 1, 1), ScalarTestFunction.indicator(0, 1, 2), 0.7)


@given(st.integers(0, 2**32 - 1), st.integers(1, 30), hursts)
def test_abs_norm_domination(seed, n, h):
    psi = random_test_function(np.random.default_rng(seed), 1.5, n)
    assert norm_abs_h(psi, h) <= abs_norm_bound(psi, h) * (1 + 1e-12)


@given(st.integers(0, 2**32 - 1), hursts)
def test_abs_norm_dominates_signed_norm(seed, h):
    psi = random_test_function(np.random.default_rng(seed), 1.0, 8)
    assert scalar_product_h(psi, psi, h) <= norm_abs_h(psi, h) * (1 + 1e-12) + 1e-15


def test_abs_norm_sweep_all_pass():
    rows = abs_norm_sweep(count=20, seed=3)
    assert len(rows) == 60 and all(r.passed for r in rows)


def test_dk_dr_support():
    assert dk_dr(0.5, 0.5, 0.7) == 0.0
    assert dk_dr(0.4, 0.5, 0.7) == 0.0
    assert dk_dr(0.6, 0.5, 0.7) > 0.0


@pytest.mark.parametrize("h", [0.6, 0.85])
def test_transfer_operator_isometry(h):
    # int (K* phi)^2 = ||phi||_H^2 on the reproducing space
    phi = ScalarTestFunction(np.array([0.0, 0.4, 1.0]), np.array([1.0, -0.5]))
    assert transfer_second_moment(phi, h) == pytest.approx(scalar_product_h(phi, phi, h), rel=1e-6)


def test_khstar_domain_and_tail():
    phi = ScalarTestFunction.indicator(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        khstar_apply(phi, 0.0, 0.7)
    assert khstar_apply(phi, 1.0, 0.7) == 0.0


def test_integrand_validation():
    grid = TimeGrid(1.0, 4)
    with pytest.raises(ContractError):
        DeterministicIntegrand(grid, np.zeros((3, 2, 2)))
    psi = DeterministicIntegrand.constant(grid, np.eye(2))
    with pytest.raises(ContractError):
        psi.hs_sq(TraceClassQ.power_law(3))
    noise = sample_qfbm(TimeGrid(1.0, 8), 0.7, TraceClassQ.power_law(2), 2, seed=0)
    with pytest.raises(ContractError):
        integrate_wiener(psi, noise, 1.0)


def test_constant_integrand_telescopes():
    grid = TimeGrid(1.0, 8)
    q = TraceClassQ.power_law(2)
    noise = sample_qfbm(grid, 0.7, q, 3, seed=2)
    m = np.array([[1.0, 2.0], [0.0, -1.0]])
    got = integrate_wiener(DeterministicIntegrand.constant(grid, m), noise, 0.5)
    np.testing.assert_allclose(got, noise.coefficients[:, 4] @ m.T, atol=1e-14)


def test_exact_second_moment_matches_monte_carlo():
    grid = TimeGrid(1.0, 8)
    q = TraceClassQ.power_law(3)
    psi = DeterministicIntegrand(grid, np.random.default_rng(0).standard_normal((8, 3, 3)))
    exact = wiener_second_moment(psi, 0.75, q, 1.0)
    vals = integrate_wiener(psi, sample_qfbm(grid, 0.75, q, 20_000, seed=5), 1.0)
    emp = np.sum(vals**2, axis=1)
    assert abs(emp.mean() - exact) < 4 * emp.std() / np.sqrt(emp.size)
    assert wiener_second_moment(psi, 0.75, q, 0.0) == 0.0


def test_exact_second_moment_obeys_wiener_bound():
    grid = TimeGrid(2.0, 16)
    q = TraceClassQ.power_law(3)
    psi = DeterministicIntegrand(grid, np.random.default_rng(1).standard_normal((16, 3, 3)))
    for h in (0.6, 0.75, 0.9):
        rhs = 2 * h * 2.0 ** (2 * h - 1) * np.sum(psi.hs_sq(q)) * grid.dt
        assert wiener_second_moment(psi, h, q, 2.0) <= rhs


def test_wiener_bound_certify_passes():
    grid = TimeGrid(1.0, 8)
    check = wiener_bound_certify(DeterministicIntegrand.constant(grid, np.eye(2)), 0.75, TraceClassQ.power_law(2), 1.0, 4000, 1)
    assert check.passed and check.lhs < check.rhs
