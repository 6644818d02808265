"""Scalar fractional Brownian motion for Hurst index H in (1/2, 1).

Two independent generators are provided:

* :func:`sample_cholesky` draws exact Gaussian vectors with the fBm
  covariance ``R_H(s, t) = (t^{2H} + s^{2H} - |t - s|^{2H}) / 2``;
* :func:`sample_volterra` discretizes the Volterra representation
  ``B^H(t) = int_0^t K_H(t, s) dW(s)`` against Brownian increments.

The first is the production sampler, the second exists to cross-check the
kernel ``K_H`` and the normalizing constant ``c_H``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import betaln, roots_jacobi

from . import rng
from .errors import ContractError, DomainError, NumericError

__all__ = [
    "TimeGrid",
    "ScalarFbmPath",
    "FbmSample",
    "CovMatrix",
    "check_hurst",
    "covariance_rh",
    "c_h",
    "kernel_kh",
    "build_cov_matrix",
    "sample_cholesky",
    "volterra_weights",
    "sample_volterra",
]

_JITTERS = (0.0, 1e-14, 1e-13, 1e-12, 1e-11, 1e-10)


def check_hurst(h: float) -> float:
    h = float(h)
    if not 0.5 < h < 1.0:
        raise DomainError(f"Hurst index must lie in (1/2, 1), got {h!r}")
    return h


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_i = i * t_end / n_steps`` on ``[0, t_end]``."""

    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > 0:
            raise DomainError(f"t_end must be positive, got {self.t_end}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def index_of(self, t: float) -> int:
        """Index of grid node ``t``; raises if ``t`` is not (numerically) a node."""
        k = int(round(t / self.dt))
        if not 0 <= k <= self.n_steps or abs(k * self.dt - t) > 1e-9 * max(1.0, self.t_end):
            raise ContractError(f"t={t} is not a node of {self}")
        return k


@dataclass(frozen=True)
class ScalarFbmPath:
    grid: TimeGrid
    values: np.ndarray


@dataclass(frozen=True)
class FbmSample:
    """A batch of paths; ``values[p, i]`` is path ``p`` at node ``t_i``."""

    grid: TimeGrid
    values: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, p) -> ScalarFbmPath:
        return ScalarFbmPath(self.grid, self.values[p])

    def __iter__(self):
        for p in range(len(self)):
            yield self[p]


def covariance_rh(s, t, h: float):
    """Covariance ``E[B^H(s) B^H(t)]``; broadcasts over array arguments."""
    h = check_hurst(h)
    scalar = np.ndim(s) == 0 and np.ndim(t) == 0
    # 1-d throughout so every power goes through the same ufunc loop;
    # mixing 0-d arrays and numpy scalars can round differently
    s, t = np.broadcast_arrays(np.atleast_1d(np.asarray(s, dtype=float)), np.atleast_1d(np.asarray(t, dtype=float)))
    if np.any(s < 0) or np.any(t < 0):
        raise DomainError("fBm covariance is defined for non-negative times only")
    two_h = 2.0 * h
    out = 0.5 * (np.power(t, two_h) + np.power(s, two_h) - np.power(np.abs(t - s), two_h))
    return out[0] if scalar else out


def c_h(h: float) -> float:
    """Normalizing constant ``sqrt(H(2H-1) / B(2-2H, H-1/2))``."""
    h = check_hurst(h)
    return float(np.sqrt(h * (2.0 * h - 1.0) * np.exp(-betaln(2.0 - 2.0 * h, h - 0.5))))


@lru_cache(maxsize=16)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=16)
def _jacobi(n: int, a: float):
    return roots_jacobi(n, 0.0, a - 1.0)


def _kernel_integral(t, s, h, n, panels=24):
    # int_0^{t-s} w^{a-1} (s+w)^a dw, a = H - 1/2.  The singular piece
    # [0, min(s, t-s)] goes to Gauss-Jacobi with weight w^{a-1}; the rest is
    # split into geometric panels, on each of which the integrand is smooth.
    a = h - 0.5
    width = np.clip(t - s, 0.0, None)
    w1 = np.minimum(s, width)
    xj, wj = _jacobi(n, a)
    head = 0.5 * w1[..., None] * (xj + 1.0)
    out = (0.5 * w1) ** a * (((s[..., None] + head) ** a) @ wj)
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(w1 > 0, width / np.where(w1 > 0, w1, 1.0), 1.0) ** (1.0 / panels)
    x, w = _legendre(n)
    edges = w1[..., None] * q[..., None] ** np.arange(panels + 1)
    lo, hi = edges[..., :-1, None], edges[..., 1:, None]
    u = 0.5 * (hi - lo) * (x + 1.0) + lo
    vals = u ** (a - 1.0) * (s[..., None, None] + u) ** a
    out += np.sum(0.5 * (hi - lo)[..., 0] * (vals @ w), axis=-1)
    return out


def kernel_kh(t, s, h: float, quad_points: int = 16, rtol: float = 1e-10):
    """Volterra kernel ``K_H(t, s)``, zero for ``t <= s``.

    The ``(u - s)^{H - 3/2}`` singularity is carried by a Gauss-Jacobi
    weight and the remainder by geometric Gauss-Legendre panels.  The rule
    is run at ``quad_points`` and ``2 * quad_points`` nodes per panel and
    the refined value is returned only if both agree to ``rtol``.
    """
    h = check_hurst(h)
    if quad_points < 8:
        raise DomainError("quad_points must be at least 8")
    t, s = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(s, dtype=float))
    active = t > s
    if np.any(active & (s <= 0.0)):
        raise DomainError("K_H(t, s) with s = 0 < t is undefined (weight s^{1/2-H})")
    out = np.zeros(t.shape)
    if np.any(active):
        ta, sa = t[active], s[active]
        coarse = _kernel_integral(ta, sa, h, quad_points)
        fine = _kernel_integral(ta, sa, h, 2 * quad_points)
        if np.any(np.abs(fine - coarse) > rtol * np.maximum(np.abs(fine), 1e-300)):
            raise NumericError("K_H quadrature refinement did not converge")
        out[active] = c_h(h) * sa ** (0.5 - h) * fine
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class CovMatrix:
    """``R_H(t_i, t_j)`` over the interior nodes ``t_1 .. t_n`` of ``grid``."""

    grid: TimeGrid
    h: float
    matrix: np.ndarray
    _factor: list = field(default_factory=list, repr=False, compare=False)

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes[1:]

    @property
    def jitter(self) -> float:
        return self.factor_with_jitter()[1]

    def factor(self) -> np.ndarray:
        return self.factor_with_jitter()[0]

    def factor_with_jitter(self):
        """Lower Cholesky factor, escalating diagonal jitter up to 1e-10 relative."""
        if not self._factor:
            scale = float(np.max(np.diag(self.matrix)))
            eye = np.eye(self.matrix.shape[0])
            for jit in _JITTERS:
                try:
                    low = np.linalg.cholesky(self.matrix + jit * scale * eye)
                except np.linalg.LinAlgError:
                    continue
                self._factor.append((low, jit))
                break
            else:
                raise NumericError(
                    f"covariance not factorizable with jitter up to {_JITTERS[-1]:g}; "
                    "grid too fine for working precision"
                )
        return self._factor[0]


def build_cov_matrix(grid: TimeGrid, h: float) -> CovMatrix:
    h = check_hurst(h)
    t = grid.nodes[1:]
    m = covariance_rh(t[:, None], t[None, :], h)
    m = 0.5 * (m + m.T)  # bitwise symmetric
    np.fill_diagonal(m, t ** (2.0 * h))
    return CovMatrix(grid, h, m)


def sample_cholesky(cov: CovMatrix, n_paths: int, seed: int, first_path: int = 0) -> FbmSample:
    """Exact fBm paths; path ``p`` depends only on ``(seed, p)``."""
    n = cov.matrix.shape[0]
    values = np.zeros((n_paths, n + 1))
    if n_paths == 0:
        return FbmSample(cov.grid, values)
    z = rng.normals(seed, rng.FBM, range(first_path, first_path + n_paths), n)
    values[:, 1:] = z @ cov.factor().T
    return FbmSample(cov.grid, values)


def _first_cell_sq(t, width, h, n):
    # int_0^width K(t,s)^2 ds; K^2 = s^{1-2H} * (regular part)^2
    x, w = roots_jacobi(n, 0.0, 1.0 - 2.0 * h)
    s = 0.5 * width * (x + 1.0)
    reg = c_h(h) * _kernel_integral(np.full_like(s, t), s, h, 32)
    return (0.5 * width) ** (2.0 - 2.0 * h) * np.sum(w * reg**2)


def _last_cell_sq(t, width, h, n):
    # int_{t-width}^t K(t,s)^2 ds; K^2 ~ (t-s)^{2H-1} near s = t
    x, w = roots_jacobi(n, 2.0 * h - 1.0, 0.0)
    s = t - width + 0.5 * width * (x + 1.0)
    k = kernel_kh(np.full_like(s, t), s, h)
    return 0.5 * width * np.sum(w * k**2 / (1.0 - x) ** (2.0 * h - 1.0))


def _inner_cells_sq(t, left, width, h, n):
    x, w = _legendre(n)
    s = left[:, None] + 0.5 * width * (x + 1.0)
    k = kernel_kh(np.full_like(s, t), s, h)
    return 0.5 * width * (k**2 @ w)


@lru_cache(maxsize=32)
def volterra_weights(
    t_end: float, n_steps: int, h: float, substeps: int = 4, scheme: str = "rms"
) -> np.ndarray:
    """Weights ``W[i-1, j]`` so that ``B^H(t_i) ~ sum_j W[i-1, j] dW_j``.

    The Brownian grid has ``substeps`` cells per output step.  ``scheme``:

    ``"midpoint"``
        ``K_H(t_i, s_j*)`` at the cell midpoint.
    ``"rms"``
        ``sqrt(mean over cell of K_H(t_i, .)^2)``; preserves the variance
        carried by each cell, including the singular cell at ``s = 0``.
    """
    h = check_hurst(h)
    if scheme not in ("rms", "midpoint"):
        raise DomainError(f"unknown Volterra weight scheme {scheme!r}")
    grid = TimeGrid(t_end, n_steps)
    nb = n_steps * substeps
    db = grid.dt / substeps
    edges = np.arange(nb + 1) * db
    out = np.zeros((n_steps, nb))
    for i in range(1, n_steps + 1):
        t = grid.nodes[i]
        ncell = i * substeps
        if scheme == "midpoint":
            out[i - 1, :ncell] = kernel_kh(t, edges[:ncell] + 0.5 * db, h)
            continue
        sq = np.empty(ncell)
        sq[0] = _first_cell_sq(t, db, h, 24)
        if ncell > 1:
            sq[1:-1] = _inner_cells_sq(t, edges[1 : ncell - 1], db, h, 24)
            sq[-1] = _last_cell_sq(t, db, h, 24)
        out[i - 1, :ncell] = np.sqrt(sq / db)
    out.setflags(write=False)
    return out


def sample_volterra(
    grid: TimeGrid,
    h: float,
    n_paths: int,
    seed: int,
    substeps: int = 4,
    scheme: str = "rms",
    first_path: int = 0,
) -> FbmSample:
    """fBm paths from a discretized Volterra integral over Brownian increments."""
    w = volterra_weights(grid.t_end, grid.n_steps, check_hurst(h), substeps, scheme)
    values = np.zeros((n_paths, grid.n_steps + 1))
    if n_paths == 0:
        return FbmSample(grid, values)
    db = grid.dt / substeps
    dw = np.sqrt(db) * rng.normals(seed, rng.BROWNIAN, range(first_path, first_path + n_paths), w.shape[1])
    values[:, 1:] = dw @ w.T
    return FbmSample(grid, values)
