"""Verification sweeps shared by the CLI, the scripts and the test-suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import rng
from .fbm_core import TimeGrid, build_cov_matrix, check_hurst, sample_cholesky, sample_volterra
from .hilbert import TraceClassQ, sample_qfbm
from .mcstats import jackknife_cov, mean_se
from .semigroup import SpectralGenerator, sharp_c
from .wiener_integral import (
    BoundCheck,
    integrate_wiener,
    abs_norm_bound,
    wiener_fixtures,
    norm_abs_h,
    random_test_function,
)

__all__ = [
    "CovReport",
    "cov_report",
    "cross_generator",
    "abs_norm_sweep",
    "wiener_bound_sweep",
    "semigroup_sweep",
    "ou_second_moment",
]


@dataclass(frozen=True)
class CovReport:
    times: np.ndarray
    empirical: np.ndarray
    exact: np.ndarray
    se: np.ndarray

    @property
    def z(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.se > 0, (self.empirical - self.exact) / self.se, 0.0)

    @property
    def var_rel_err(self) -> float:
        return float(abs(self.empirical[-1, -1] / self.exact[-1, -1] - 1.0))

    def scaled_error(self) -> np.ndarray:
        """``|C_hat - R| / sqrt(R_ii R_jj)``."""
        d = np.sqrt(np.diag(self.exact))
        return np.abs(self.empirical - self.exact) / np.outer(d, d)


def cov_report(grid: TimeGrid, h: float, n_paths: int, seed: int, method: str = "cholesky") -> CovReport:
    """Sample covariance of the interior nodes with jackknife standard errors."""
    cov = build_cov_matrix(grid, h)
    if method == "cholesky":
        paths = sample_cholesky(cov, n_paths, seed)
    elif method == "volterra":
        paths = sample_volterra(grid, h, n_paths, seed)
    else:
        raise ValueError(f"unknown method {method!r}")
    emp, se = jackknife_cov(paths.values[:, 1:])
    return CovReport(cov.times, emp, cov.matrix, se)


def cross_generator(grid: TimeGrid, h: float, n_paths: int, seed: int) -> tuple:
    """``max_ij |C_chol - C_volt| / sqrt(R_ii R_jj)`` and the two reports."""
    a = cov_report(grid, h, n_paths, seed, "cholesky")
    b = cov_report(grid, h, n_paths, seed, "volterra")
    d = np.sqrt(np.diag(a.exact))
    worst = float(np.max(np.abs(a.empirical - b.empirical) / np.outer(d, d)))
    return worst, a, b


def abs_norm_sweep(hursts=(0.6, 0.75, 0.9), count: int = 100, seed: int = 0, t_end: float = 1.0) -> list:
    """``||psi||^2_{|H|} <= 2H T^{2H-1} int psi^2`` on random piecewise-constant ``psi``."""
    gen = rng.stream(seed, rng.FIXTURE, mode=1)
    rows = []
    for h in hursts:
        for i in range(count):
            psi = random_test_function(gen, t_end, int(gen.integers(1, 40)))
            lhs, rhs = norm_abs_h(psi, h), abs_norm_bound(psi, h)
            rows.append(BoundCheck(f"abs-norm H={h:g} #{i}", lhs, rhs, 0.0, rhs - lhs, lhs <= rhs))
    return rows


def wiener_bound_sweep(
    hursts=(0.6, 0.75, 0.9), n_paths: int = 10_000, seed: int = 0, n_modes: int = 4, n_steps: int = 16, t_end: float = 1.0,
    fixtures=None,
) -> list:
    """Monte Carlo ``E||int psi dB^H||^2`` against ``2H T^{2H-1} int ||psi||^2_{L_2^0}``.

    The same Q-fBm sample serves all fixtures at a given ``H``.
    """
    grid = TimeGrid(t_end, n_steps)
    q = TraceClassQ.power_law(n_modes)
    fx = wiener_fixtures(grid, n_modes, seed)
    if fixtures is not None:
        fx = {k: v for k, v in fx.items() if k in fixtures}
    rows = []
    for h in hursts:
        noise = sample_qfbm(grid, h, q, n_paths, seed)
        for name, psi in fx.items():
            vals = integrate_wiener(psi, noise, t_end)
            lhs, se = (float(v) for v in mean_se(np.sum(vals**2, axis=1)))
            rhs = float(2.0 * h * t_end ** (2.0 * h - 1.0) * np.sum(psi.hs_sq(q)) * grid.dt)
            margin = 3.0 * se / lhs if lhs > 0 else 0.0
            rows.append(BoundCheck(f"wiener {name} H={h:g}", lhs, rhs, se, margin, lhs <= rhs * (1.0 + margin)))
    return rows


def semigroup_sweep(gen: SpectralGenerator, beta: float, t_end: float = 1.0, n_times: int = 1000):
    """Count violations of ``max_n mu_n^{1-b} e^{-mu_n t} <= C_{1-b} / t^{1-b}``
    on log-spaced ``t`` in ``(0, t_end]``.  Returns ``(violations, worst ratio)``."""
    a = 1.0 - beta
    t = np.geomspace(1e-6 * t_end, t_end, n_times)
    norms = np.max(gen.mu[None, :] ** a * np.exp(-np.outer(t, gen.mu)), axis=1)
    bound = sharp_c(a) / t**a
    return int(np.sum(norms > bound)), float(np.max(norms / bound))


def ou_second_moment(mu: float, noise_var: float, h: float, t_end: float) -> float:
    """``noise_var H(2H-1) int int e^{-mu(T-u)} e^{-mu(T-v)} |u-v|^{2H-2} du dv`` on ``[0,T]^2``.

    The diagonal singularity is handled by an algebraic-weight rule in the
    inner variable; symmetry halves the square.
    """
    h = check_hurst(h)

    def inner(u):
        if u <= 0:
            return 0.0
        val, _ = quad(lambda v: math.exp(-mu * (t_end - v)), 0.0, u, weight="alg", wvar=(0.0, 2 * h - 2), epsrel=1e-12)
        return val

    outer, _ = quad(lambda u: math.exp(-mu * (t_end - u)) * inner(u), 0.0, t_end, epsrel=1e-11, limit=200)
    return noise_var * h * (2 * h - 1) * 2.0 * outer
