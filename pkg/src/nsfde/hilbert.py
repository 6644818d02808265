"""Truncated Hilbert-space machinery: trace-class Q, Q-Hilbert-Schmidt norms, Q-fBm.

X and Y are both represented by their first ``N`` coordinates in a fixed
orthonormal basis ``e_1 .. e_N``.  An operator ``psi: Y -> X`` is an
``N x N`` matrix whose column ``n`` is ``psi e_n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import ContractError, DomainError
from .fbm_core import TimeGrid, build_cov_matrix, check_hurst

__all__ = [
    "Basis",
    "TraceClassQ",
    "QFbmPath",
    "QFbmSample",
    "trace_q",
    "hs_norm",
    "sample_qfbm",
]


@dataclass(frozen=True)
class Basis:
    n_modes: int

    def __post_init__(self):
        if self.n_modes < 1:
            raise DomainError("a basis needs at least one mode")

    def vector(self, n: int) -> np.ndarray:
        """Coordinates of ``e_n`` (1-based, as in the usual notation)."""
        v = np.zeros(self.n_modes)
        v[n - 1] = 1.0
        return v


@dataclass(frozen=True)
class TraceClassQ:
    """Diagonal covariance ``Q e_n = lambda_n e_n`` truncated at ``N`` modes.

    ``tail_bound`` bounds the discarded trace ``sum_{n > N} lambda_n``.
    """

    eigenvalues: np.ndarray
    tail_bound: float = 0.0

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        if lam.size == 0 or np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise DomainError("Q eigenvalues must be finite and non-negative")
        if self.tail_bound < 0:
            raise DomainError("tail bound must be non-negative")
        object.__setattr__(self, "eigenvalues", lam)

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    @classmethod
    def power_law(cls, n_modes: int, decay: float = 2.0, scale: float = 1.0) -> "TraceClassQ":
        """``lambda_n = scale * n^{-decay}``; needs ``decay > 1`` for finite trace.

        The tail is bounded by ``scale * int_N^inf x^{-decay} dx``.
        """
        if decay <= 1.0:
            raise DomainError("power-law eigenvalues need decay > 1 to be trace class")
        n = np.arange(1, n_modes + 1, dtype=float)
        tail = scale * n_modes ** (1.0 - decay) / (decay - 1.0)
        return cls(scale * n**-decay, tail)


def trace_q(q: TraceClassQ) -> float:
    """Truncated trace; see ``q.tail_bound`` for the discarded part."""
    return float(np.sum(q.eigenvalues))


def hs_norm(psi, q: TraceClassQ) -> float:
    """``||psi||_{L_2^0} = sqrt(sum_n lambda_n ||psi e_n||^2)``."""
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 2 or psi.shape[1] != q.n_modes:
        raise ContractError(f"operator of shape {psi.shape} does not act on {q.n_modes} modes")
    return float(np.sqrt(np.sum(q.eigenvalues * np.sum(psi**2, axis=0))))


@dataclass(frozen=True)
class QFbmPath:
    grid: TimeGrid
    coefficients: np.ndarray  # (nodes, N)


@dataclass(frozen=True)
class QFbmSample:
    """``coefficients[p, i, n] = <B^H(t_i), e_n>`` for path ``p``."""

    grid: TimeGrid
    h: float
    q: TraceClassQ
    coefficients: np.ndarray

    def __len__(self):
        return self.coefficients.shape[0]

    def __getitem__(self, p) -> QFbmPath:
        return QFbmPath(self.grid, self.coefficients[p])

    def __iter__(self):
        for p in range(len(self)):
            yield self[p]

    def increments(self) -> np.ndarray:
        return np.diff(self.coefficients, axis=1)


def sample_qfbm(
    grid: TimeGrid, h: float, q: TraceClassQ, n_paths: int, seed: int, first_path: int = 0
) -> QFbmSample:
    """``B^H(t) = sum_n sqrt(lambda_n) e_n beta_n(t)`` with independent scalar fBms.

    Mode ``n`` (0-based) of path ``p`` uses the stream ``(seed, FBM, p, n)``,
    so a one-mode sample with ``lambda_1 = 1`` coincides with
    :func:`~nsfde.fbm_core.sample_cholesky`.
    """
    h = check_hurst(h)
    low = build_cov_matrix(grid, h).factor()
    n_int = grid.n_steps
    coeffs = np.zeros((n_paths, n_int + 1, q.n_modes))
    root = np.sqrt(q.eigenvalues)
    for mode in range(q.n_modes):
        z = rng.normals(seed, rng.FBM, range(first_path, first_path + n_paths), n_int, mode=mode)
        coeffs[:, 1:, mode] = root[mode] * (z @ low.T)
    return QFbmSample(grid, h, q, coeffs)
