"""Wiener integrals of deterministic integrands against (Q-)fBm.

Integrands are piecewise constant in time.  For such functions the weakly
singular double integral

    H(2H-1) int_I int_J |t - s|^{2H-2} ds dt

has the closed form ``(|d-a|^{2H} - |d-b|^{2H} + |c-b|^{2H} - |c-a|^{2H}) / 2``
for cells ``I = [a, b]`` and ``J = [c, d]``, so the scalar product of the
reproducing kernel space and the ``|H|`` norm are exact up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import rng
from .errors import ContractError, DomainError
from .fbm_core import TimeGrid, c_h, check_hurst
from .hilbert import QFbmSample, TraceClassQ, sample_qfbm
from .mcstats import mean_se

__all__ = [
    "ScalarTestFunction",
    "DeterministicIntegrand",
    "BoundCheck",
    "cell_gram",
    "scalar_product_h",
    "norm_abs_h",
    "abs_norm_bound",
    "dk_dr",
    "khstar_apply",
    "transfer_second_moment",
    "integrate_wiener",
    "wiener_second_moment",
    "wiener_bound_certify",
    "random_test_function",
    "random_integrand",
    "wiener_fixtures",
]


@dataclass(frozen=True)
class ScalarTestFunction:
    """``psi = sum_k values[k] 1_{[edges[k], edges[k+1])}`` on ``[0, edges[-1]]``."""

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if edges.ndim != 1 or values.shape != (edges.size - 1,):
            raise ContractError("need len(values) == len(edges) - 1")
        if edges[0] != 0.0 or np.any(np.diff(edges) <= 0):
            raise DomainError("edges must start at 0 and increase strictly")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)

    @property
    def t_end(self) -> float:
        return float(self.edges[-1])

    @classmethod
    def indicator(cls, a: float, b: float, t_end: float) -> "ScalarTestFunction":
        """``1_{[a, b]}`` on ``[0, t_end]``."""
        cuts = sorted({0.0, float(a), float(b), float(t_end)})
        edges = np.array(cuts)
        mids = 0.5 * (edges[:-1] + edges[1:])
        return cls(edges, ((mids >= a) & (mids <= b)).astype(float))

    def __call__(self, r):
        idx = np.clip(np.searchsorted(self.edges, r, side="right") - 1, 0, self.values.size - 1)
        return self.values[idx]

    def l2_sq(self) -> float:
        return float(np.sum(self.values**2 * np.diff(self.edges)))

    def refine(self, edges) -> np.ndarray:
        """Values on a finer partition ``edges`` that contains ours."""
        mids = 0.5 * (edges[:-1] + edges[1:])
        return self(mids)


def _common(psi: ScalarTestFunction, phi: ScalarTestFunction):
    if abs(psi.t_end - phi.t_end) > 1e-12 * psi.t_end:
        raise ContractError("test functions live on different intervals")
    edges = np.union1d(psi.edges, phi.edges)
    return edges, psi.refine(edges), phi.refine(edges)


def cell_gram(edges, h: float) -> np.ndarray:
    """``W[k, l] = H(2H-1) int_{I_k} int_{I_l} |t-s|^{2H-2}``; exact."""
    h = check_hurst(h)
    a, b = edges[:-1, None], edges[1:, None]
    c, d = edges[None, :-1], edges[None, 1:]
    p = 2.0 * h
    return 0.5 * (np.abs(d - a) ** p - np.abs(d - b) ** p + np.abs(c - b) ** p - np.abs(c - a) ** p)


def scalar_product_h(psi: ScalarTestFunction, phi: ScalarTestFunction, h: float) -> float:
    edges, u, v = _common(psi, phi)
    return float(u @ cell_gram(edges, h) @ v)


def norm_abs_h(psi: ScalarTestFunction, h: float) -> float:
    """Squared ``|H|`` norm ``H(2H-1) int int |psi(s)||psi(t)||s-t|^{2H-2}``."""
    u = np.abs(psi.values)
    return float(u @ cell_gram(psi.edges, h) @ u)


def abs_norm_bound(psi: ScalarTestFunction, h: float) -> float:
    """``2H T^{2H-1} int_0^T psi^2``, the L^2 domination of the ``|H|`` norm."""
    h = check_hurst(h)
    return 2.0 * h * psi.t_end ** (2.0 * h - 1.0) * psi.l2_sq()


def dk_dr(r, s, h: float):
    """``dK_H/dr (r, s) = c_H s^{1/2-H} (r-s)^{H-3/2} r^{H-1/2}`` for ``r > s > 0``, else 0."""
    h = check_hurst(h)
    r, s = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(s, dtype=float))
    out = np.zeros(r.shape)
    on = r > s
    out[on] = c_h(h) * s[on] ** (0.5 - h) * (r[on] - s[on]) ** (h - 1.5) * r[on] ** (h - 0.5)
    return out[()] if out.ndim == 0 else out


def _singular_primitive(s, x, h):
    # int_s^x (r-s)^{H-3/2} r^{H-1/2} dr, algebraic-weight quadrature (QAWS)
    if x <= s:
        return 0.0
    val, _ = quad(lambda r: r ** (h - 0.5), s, x, weight="alg", wvar=(h - 1.5, 0.0), epsabs=0.0, epsrel=1e-11, limit=200)
    return val


def _khstar_regular(phi, s, h):
    # s^{H-1/2} (K_H^* phi)(s); finite at s = 0
    total = 0.0
    for k in range(phi.values.size):
        lo, hi = phi.edges[k], phi.edges[k + 1]
        if hi <= s or phi.values[k] == 0.0:
            continue
        total += phi.values[k] * (_singular_primitive(s, hi, h) - _singular_primitive(s, max(lo, s), h))
    return c_h(h) * total


def khstar_apply(phi: ScalarTestFunction, s: float, h: float) -> float:
    """Transfer operator ``(K_H^* phi)(s) = int_s^T phi(r) dK_H/dr(r, s) dr``."""
    h = check_hurst(h)
    if s <= 0:
        raise DomainError("K_H^* phi is evaluated at s > 0 only")
    if s >= phi.t_end:
        return 0.0
    return float(s ** (0.5 - h) * _khstar_regular(phi, s, h))


def transfer_second_moment(phi: ScalarTestFunction, h: float) -> float:
    """``int_0^T (K_H^* phi)(s)^2 ds``, the variance of ``int phi dB^H`` via Brownian motion."""
    h = check_hurst(h)
    edges = phi.edges
    total = 0.0
    for k in range(edges.size - 1):
        lo, hi = edges[k], edges[k + 1]
        if k == 0:
            # (K* phi)^2 ~ s^{1-2H} near 0: integrate the regular part with an algebraic weight
            val, _ = quad(
                lambda s: _khstar_regular(phi, s, h) ** 2,
                lo, hi, weight="alg", wvar=(1 - 2 * h, 0.0), epsrel=1e-10, limit=200,
            )
        else:
            val, _ = quad(lambda s: khstar_apply(phi, s, h) ** 2, lo, hi, epsrel=1e-10, limit=200)
        total += val
    return total


@dataclass(frozen=True)
class DeterministicIntegrand:
    """``psi(s) = matrices[i]`` for ``s`` in ``[t_i, t_{i+1})``; each matrix maps Y to X."""

    grid: TimeGrid
    matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=float)
        if m.ndim != 3 or m.shape[0] != self.grid.n_steps:
            raise ContractError("need one (N_x, N_y) matrix per grid cell")
        object.__setattr__(self, "matrices", m)

    @classmethod
    def constant(cls, grid: TimeGrid, matrix) -> "DeterministicIntegrand":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(grid, np.broadcast_to(matrix, (grid.n_steps,) + matrix.shape).copy())

    def hs_sq(self, q: TraceClassQ) -> np.ndarray:
        """``||psi_i||^2_{L_2^0}`` per cell."""
        if self.matrices.shape[2] != q.n_modes:
            raise ContractError("integrand and Q disagree on the number of modes")
        return np.einsum("ixy,y->i", self.matrices**2, q.eigenvalues)


def integrate_wiener(psi: DeterministicIntegrand, qfbm: QFbmSample, t: float) -> np.ndarray:
    """Forward sums ``sum_{t_i < t} psi(t_i) (B^H(t_{i+1}) - B^H(t_i))``, one row per path."""
    if psi.grid != qfbm.grid:
        raise ContractError("integrand and noise are on different grids")
    k = psi.grid.index_of(t)
    db = qfbm.increments()[:, :k]
    return np.einsum("ixy,piy->px", psi.matrices[:k], db)


def wiener_second_moment(psi: DeterministicIntegrand, h: float, q: TraceClassQ, t: float) -> float:
    """Exact ``E||int_0^t psi dB^H||^2`` for the piecewise-constant integrand."""
    k = psi.grid.index_of(t)
    if k == 0:
        return 0.0
    gram = cell_gram(psi.grid.nodes[: k + 1], h)
    m = psi.matrices[:k]
    # sum_n lambda_n sum_{ij} <psi_i e_n, psi_j e_n> W_ij
    inner = np.einsum("ixn,jxn->nij", m, m)
    return float(np.einsum("n,nij,ij->", q.eigenvalues, inner, gram))


@dataclass(frozen=True)
class BoundCheck:
    """One certified inequality ``lhs <= rhs`` with its Monte Carlo margin."""

    name: str
    lhs: float
    rhs: float
    se: float
    margin: float
    passed: bool


def wiener_bound_certify(
    psi: DeterministicIntegrand, h: float, q: TraceClassQ, t: float, n_paths: int, seed: int
) -> BoundCheck:
    """Monte Carlo check of ``E||int_0^t psi dB^H||^2 <= 2H t^{2H-1} int_0^t ||psi||^2_{L_2^0}``.

    Passes when ``lhs <= rhs * (1 + 3 * se / lhs)``.
    """
    h = check_hurst(h)
    k = psi.grid.index_of(t)
    noise = sample_qfbm(psi.grid, h, q, n_paths, seed)
    vals = integrate_wiener(psi, noise, t)
    lhs, se = mean_se(np.sum(vals**2, axis=1))
    lhs, se = float(lhs), float(se)
    rhs = 0.0 if k == 0 else float(2.0 * h * t ** (2.0 * h - 1.0) * np.sum(psi.hs_sq(q)[:k]) * psi.grid.dt)
    margin = 3.0 * se / lhs if lhs > 0 else 0.0
    return BoundCheck("wiener", lhs, rhs, se, margin, lhs <= rhs * (1.0 + margin))


def random_test_function(gen: np.random.Generator, t_end: float, n_cells: int) -> ScalarTestFunction:
    """Random partition of ``[0, t_end]`` with standard normal cell values."""
    inner = np.sort(gen.uniform(0.0, t_end, n_cells - 1))
    edges = np.unique(np.concatenate([[0.0], inner, [t_end]]))
    return ScalarTestFunction(edges, gen.standard_normal(edges.size - 1))


def random_integrand(gen: np.random.Generator, grid: TimeGrid, n_modes: int, pieces: int = 4) -> DeterministicIntegrand:
    """Operator-valued integrand, constant on ``pieces`` blocks of grid cells."""
    blocks = gen.standard_normal((pieces, n_modes, n_modes))
    owner = np.minimum(np.arange(grid.n_steps) * pieces // grid.n_steps, pieces - 1)
    return DeterministicIntegrand(grid, blocks[owner])


def wiener_fixtures(grid: TimeGrid, n_modes: int, seed: int) -> dict:
    """Three operator-valued integrands: constant diagonal, random blocks, and the
    semigroup-smoothed identity ``psi(s) = exp(-n^2 (T - s))`` per mode."""
    n = np.arange(1, n_modes + 1, dtype=float)
    mids = grid.nodes[:-1] + 0.5 * grid.dt
    smoothing = np.exp(-np.outer(grid.t_end - mids, n**2))
    return {
        "constant": DeterministicIntegrand.constant(grid, np.diag(1.0 / n)),
        "blocks": random_integrand(rng.stream(seed, rng.FIXTURE), grid, n_modes),
        "semigroup": DeterministicIntegrand(grid, smoothing[:, :, None] * np.eye(n_modes)[None]),
    }
