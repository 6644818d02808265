"""Analytic semigroup realized through a self-adjoint spectral generator.

``A e_n = -mu_n e_n`` with ``0 < mu_1 <= mu_2 <= ...``.  Then
``T(t) e_n = exp(-mu_n t) e_n`` and ``(-A)^{a} e_n = mu_n^{a} e_n``, so every
operator norm used by the hypothesis checks has a closed form.  Vectors are
coefficient arrays whose last axis indexes modes; leading axes broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError

__all__ = [
    "SpectralGenerator",
    "apply_semigroup",
    "apply_frac_power",
    "neg_power_norm",
    "sharp_c",
    "frac_power_semigroup_bound",
    "contraction_gamma",
]


@dataclass(frozen=True)
class SpectralGenerator:
    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        if mu.size == 0 or not mu[0] > 0:
            raise DomainError("generator needs mu_1 > 0 (0 in the resolvent set)")
        if np.any(np.diff(mu) < 0):
            raise DomainError("generator eigenvalues must be non-decreasing")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def n_modes(self) -> int:
        return self.mu.size

    @classmethod
    def laplacian_dirichlet(cls, n_modes: int) -> "SpectralGenerator":
        """Dirichlet Laplacian on (0, pi): ``mu_n = n^2``."""
        return cls(np.arange(1, n_modes + 1, dtype=float) ** 2)

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.n_modes:
            raise ContractError(f"vector has {v.shape[-1]} modes, generator has {self.n_modes}")
        return v


def apply_semigroup(gen: SpectralGenerator, t: float, v) -> np.ndarray:
    if t < 0:
        raise DomainError("semigroup is defined for t >= 0")
    return np.exp(-gen.mu * t) * gen._check(v)


def apply_frac_power(gen: SpectralGenerator, alpha: float, sign: int, v) -> np.ndarray:
    """``(-A)^{sign * alpha} v`` for ``0 < alpha <= 1`` and ``sign`` in {+1, -1}."""
    if not 0 < alpha <= 1:
        raise DomainError(f"fractional power needs 0 < alpha <= 1, got {alpha}")
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    return gen.mu ** (sign * alpha) * gen._check(v)


def neg_power_norm(gen: SpectralGenerator, beta: float) -> float:
    """Operator norm of ``(-A)^{-beta}``, attained on the first mode."""
    return float(gen.mu[0] ** -beta)


def sharp_c(alpha: float) -> float:
    """``sup_{x>0} x^alpha e^{-x} = (alpha/e)^alpha``; the constant in
    ``||(-A)^alpha T(t)|| <= C_alpha / t^alpha`` for any positive spectrum."""
    return (alpha / math.e) ** alpha


def frac_power_semigroup_bound(gen: SpectralGenerator, beta: float, t: float):
    """Return ``(norm, bound)`` for ``||(-A)^{1-beta} T(t)||`` and ``C_{1-beta}/t^{1-beta}``."""
    if not 0.5 < beta < 1:
        raise DomainError(f"beta must lie in (1/2, 1), got {beta}")
    if not t > 0:
        raise DomainError("the smoothing bound diverges at t = 0")
    a = 1.0 - beta
    norm = float(np.max(gen.mu**a * np.exp(-gen.mu * t)))
    bound = sharp_c(a) / t**a
    if norm > bound:
        raise AssertionError(f"spectral norm {norm} exceeds smoothing bound {bound}")
    return norm, bound


def contraction_gamma(gen: SpectralGenerator, beta: float, m_g: float, t: float) -> float:
    """Contraction factor of the neutral fixed-point map on a window of length ``t``:
    ``2 M_g^2 (||(-A)^{-beta}||^2 + C_{1-beta}^2 t^{2 beta - 1} t / (2 beta - 1))``."""
    c = sharp_c(1.0 - beta)
    norm = neg_power_norm(gen, beta)
    return 2.0 * m_g**2 * (norm**2 + c**2 * t ** (2.0 * beta - 1.0) * t / (2.0 * beta - 1.0))
