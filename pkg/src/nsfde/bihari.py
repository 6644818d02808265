"""Bihari and Gronwall-Bellman bounds, and the concave moduli they run on.

If ``g(t) <= h(t) + int_0^t lam(s) rho(g(s)) ds`` with ``rho`` continuous and
non-decreasing, then ``g(t) <= Ginv(G(h*(t)) + int_0^t lam)`` where
``G(x) = int_{x0}^x dy / rho(y)`` and ``h*`` is the running maximum of ``h``.
With ``rho(y) = y`` this is the Gronwall-Bellman bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from .errors import DomainError
from .fbm_core import TimeGrid

__all__ = [
    "ConcaveModulus",
    "ModulusCheck",
    "linear",
    "affine",
    "log_splice",
    "power",
    "registry",
    "by_name",
    "is_nondecreasing",
    "is_midpoint_concave",
    "gronwall_bound",
    "bihari_bound",
    "bihari_G",
    "bihari_G_inverse",
    "modulus_check",
    "osgood_at_infinity",
]


@dataclass(frozen=True)
class ConcaveModulus:
    """A registered concave, non-decreasing ``rho: [0, inf) -> [0, inf)``.

    Build instances with :func:`linear`, :func:`affine`, :func:`log_splice` or
    :func:`power`; arbitrary formulas are deliberately not accepted.
    """

    kind: str
    params: tuple = field(default=())

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise DomainError("moduli are defined on [0, inf)")
        if self.kind == "linear":
            (slope,) = self.params
            out = slope * u
        elif self.kind == "affine":
            offset, slope = self.params
            out = offset + slope * u
        elif self.kind == "power":
            p, scale = self.params
            out = scale * u**p
        elif self.kind == "log_splice":
            delta, scale = self.params
            out = scale * _lambda2(u, delta)
        else:
            raise DomainError(f"unknown modulus kind {self.kind!r}")
        return out[()] if out.ndim == 0 else out

    @property
    def name(self) -> str:
        return f"{self.kind}({', '.join(f'{p:g}' for p in self.params)})"

    @property
    def osgood(self) -> bool:
        """Whether ``int_{0+} dy / rho(y)`` diverges (known in closed form per kind)."""
        if self.kind == "linear":
            return True
        if self.kind == "log_splice":
            return True
        return False

    def scaled(self, c: float) -> "ConcaveModulus":
        """``c * rho`` as another registered modulus."""
        if self.kind == "linear":
            return linear(c * self.params[0])
        if self.kind == "affine":
            return affine(c * self.params[0], c * self.params[1])
        if self.kind == "power":
            return power(self.params[0], c * self.params[1])
        return log_splice(self.params[0], c * self.params[1])


def _lambda2(u, delta):
    # u log(1/u) on [0, delta], tangent continuation beyond
    out = np.empty_like(u)
    low = u <= delta
    ul = u[low]
    out[low] = np.where(ul > 0, -ul * np.log(np.where(ul > 0, ul, 1.0)), 0.0)
    slope = -math.log(delta) - 1.0
    out[~low] = -delta * math.log(delta) + slope * (u[~low] - delta)
    return out


def linear(slope: float) -> ConcaveModulus:
    if slope < 0:
        raise DomainError("slope must be non-negative")
    return ConcaveModulus("linear", (float(slope),))


def affine(offset: float, slope: float) -> ConcaveModulus:
    if offset < 0 or slope < 0:
        raise DomainError("affine modulus needs non-negative coefficients")
    return ConcaveModulus("affine", (float(offset), float(slope)))


def power(p: float, scale: float = 1.0) -> ConcaveModulus:
    if not 0 < p < 1 or scale < 0:
        raise DomainError("power modulus needs 0 < p < 1 and scale >= 0")
    return ConcaveModulus("power", (float(p), float(scale)))


def log_splice(delta: float, scale: float = 1.0) -> ConcaveModulus:
    """``u log(1/u)`` up to ``delta``, continued along its tangent.

    The continuation slope ``log(1/delta) - 1`` is positive only for
    ``delta < 1/e``, which is therefore required.
    """
    if not 0 < delta < math.exp(-1.0) or scale < 0:
        raise DomainError("log-splice modulus needs 0 < delta < 1/e and scale >= 0")
    return ConcaveModulus("log_splice", (float(delta), float(scale)))


def registry():
    """Default instance of every registered kind, keyed by name."""
    return {
        "linear": linear(1.0),
        "affine": affine(1.0, 1.0),
        "log_splice": log_splice(0.1),
        "power": power(0.5),
    }


def by_name(name: str) -> ConcaveModulus:
    try:
        return registry()[name]
    except KeyError:
        raise DomainError(f"unknown modulus {name!r}; choose from {sorted(registry())}") from None


def _lattice(lo=1e-12, hi=1e4, n=200):
    return np.concatenate([[0.0], np.geomspace(lo, hi, n)])


def is_nondecreasing(fn, lattice=None, rtol=1e-12) -> bool:
    u = _lattice() if lattice is None else lattice
    v = np.asarray(fn(u), dtype=float)
    slack = rtol * max(1.0, float(np.max(np.abs(v))))
    return bool(np.all(np.diff(v) >= -slack))


def is_midpoint_concave(fn, lattice=None, rtol=1e-12) -> bool:
    """``fn((a+b)/2) >= (fn(a)+fn(b))/2`` over all lattice pairs."""
    u = _lattice(n=60) if lattice is None else lattice
    a, b = np.meshgrid(u, u, indexing="ij")
    upper = np.triu_indices(u.size, 1)
    a, b = a[upper], b[upper]
    mid = np.asarray(fn(0.5 * (a + b)))
    chord = 0.5 * (np.asarray(fn(a)) + np.asarray(fn(b)))
    slack = rtol * max(1.0, float(np.max(np.abs(chord))))
    return bool(np.all(mid >= chord - slack))


def gronwall_bound(h, lam, grid: TimeGrid) -> np.ndarray:
    """``h*(t) exp(int_0^t lam)`` with the trapezoidal rule on ``grid``."""
    h = np.asarray(h, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.any(h < 0) or np.any(lam < 0):
        raise DomainError("Gronwall bound needs non-negative curves")
    return np.maximum.accumulate(h) * np.exp(cumulative_trapezoid(lam, grid.nodes, initial=0.0))


def _primitive(rho: ConcaveModulus, y: float) -> float:
    # P with P' = 1/rho, in closed form per kind; -inf at 0 for Osgood moduli
    kind, par = rho.kind, rho.params
    if kind == "linear":
        return math.log(y) / par[0] if y > 0 else -math.inf
    if kind == "affine":
        c, k = par
        return math.log(c + k * y) / k if k > 0 else y / c
    if kind == "power":
        p, sc = par
        return y ** (1.0 - p) / ((1.0 - p) * sc)
    delta, sc = par
    if y <= delta:
        return -math.log(math.log(1.0 / y)) / sc if y > 0 else -math.inf
    m, c0 = math.log(1.0 / delta) - 1.0, delta * math.log(1.0 / delta)
    return (-math.log(math.log(1.0 / delta)) + math.log1p(m * (y - delta) / c0) / m) / sc


def _primitive_inverse(rho: ConcaveModulus, v: float) -> float:
    kind, par = rho.kind, rho.params
    try:
        if kind == "linear":
            return math.exp(par[0] * v)
        if kind == "affine":
            c, k = par
            x = (math.exp(k * v) - c) / k if k > 0 else c * v
        elif kind == "power":
            p, sc = par
            x = max((1.0 - p) * sc * v, 0.0) ** (1.0 / (1.0 - p))
        else:
            delta, sc = par
            w = sc * v
            edge = -math.log(math.log(1.0 / delta))
            if w <= edge:
                return math.exp(-math.exp(-w))
            m, c0 = math.log(1.0 / delta) - 1.0, delta * math.log(1.0 / delta)
            x = delta + c0 * math.expm1(m * (w - edge)) / m
    except OverflowError:
        return math.inf
    return max(x, 0.0)


def _check_positive(rho: ConcaveModulus, lo: float):
    if float(rho(max(lo, 1.0))) <= 0.0 or (lo > 0 and float(rho(lo)) <= 0.0):
        raise DomainError(f"modulus {rho.name} vanishes on the integration range")


def bihari_G(x: float, rho: ConcaveModulus, x0: float) -> float:
    """``G(x) = int_{x0}^x dy / rho(y)``, exact for every registered kind.

    ``G(0) = -inf`` exactly when ``rho`` is an Osgood modulus.
    """
    if x0 <= 0:
        raise DomainError("x0 must be positive")
    if x < 0:
        raise DomainError("G is defined on [0, inf)")
    _check_positive(rho, min(x, x0))
    if x == x0:
        return 0.0
    return _primitive(rho, x) - _primitive(rho, x0)


def bihari_G_inverse(y: float, rho: ConcaveModulus, x0: float) -> float:
    """Solve ``G(x) = y``.  Values below ``G(0)`` map to 0; ``inf`` signals
    that ``y`` exceeds the range of ``G`` in floating point."""
    if x0 <= 0:
        raise DomainError("x0 must be positive")
    _check_positive(rho, x0)
    if y == -math.inf:
        return 0.0
    return _primitive_inverse(rho, y + _primitive(rho, x0))


def bihari_bound(h, lam, rho: ConcaveModulus, x0: float, grid: TimeGrid) -> np.ndarray:
    """Pointwise ``Ginv(G(h*(t)) + int_0^t lam)`` on ``grid``.

    The result does not depend on ``x0``; it is kept so that ``G`` matches
    its usual normalization.
    """
    h = np.asarray(h, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if x0 <= 0:
        raise DomainError("x0 must be positive")
    if np.any(h < 0) or np.any(lam < 0):
        raise DomainError("Bihari bound needs non-negative curves")
    h_star = np.maximum.accumulate(h)
    integral = cumulative_trapezoid(lam, grid.nodes, initial=0.0)
    out = np.empty_like(h_star)
    for i, (hs, big_l) in enumerate(zip(h_star, integral)):
        out[i] = bihari_G_inverse(bihari_G(hs, rho, x0) + big_l, rho, x0)
    return np.maximum(out, h_star)


@dataclass(frozen=True)
class ModulusCheck:
    name: str
    nondecreasing: bool
    concave: bool
    vanishes_at_zero: bool
    splice_continuous: bool
    eps: tuple
    integrals: tuple
    divergent: bool

    @property
    def passed(self) -> bool:
        return (
            self.nondecreasing and self.concave and self.vanishes_at_zero
            and self.splice_continuous and self.divergent
        )


def modulus_check(
    rho: ConcaveModulus, eps=tuple(10.0 ** -np.arange(2, 11)), growth_threshold: float = 1e-3
) -> ModulusCheck:
    """Shape checks plus a numerical shadow of ``int_{0+} dy / rho = inf``.

    Divergence cannot be certified numerically.  What is checked is that
    ``I(eps) = int_eps^1 dy / rho(y)`` grows strictly as ``eps`` decreases
    through ``eps`` and that the last decade still adds more than
    ``growth_threshold``; convergent integrals such as ``u^p`` flatten out
    geometrically and fail.
    """
    splice_ok = True
    if rho.kind == "log_splice":
        delta, scale = rho.params
        left = -delta * math.log(delta) * scale
        right = float(rho(np.nextafter(delta, 2.0)))
        splice_ok = math.isclose(left, float(rho(delta)), rel_tol=1e-14) and math.isclose(left, right, rel_tol=1e-12)
    zero = float(rho(0.0)) == 0.0
    if float(rho(1.0)) == 0.0:
        # rho vanishes on [0, 1]: the integral is infinite for every eps
        integrals = tuple(math.inf for _ in eps)
        divergent = True
    else:
        # in the variable log y the integrand has no endpoint singularity
        kinks = [math.log(rho.params[0])] if rho.kind == "log_splice" else []
        integrals = tuple(
            quad(
                lambda v: math.exp(v) / float(rho(math.exp(v))), math.log(e), 0.0,
                points=[k for k in kinks if math.log(e) < k < 0.0] or None, epsabs=0.0, epsrel=1e-12, limit=200,
            )[0]
            for e in eps
        )
        steps = np.diff(integrals)
        divergent = bool(zero and np.all(steps > 0) and steps[-1] > growth_threshold)
    return ModulusCheck(
        rho.name,
        is_nondecreasing(rho),
        is_midpoint_concave(rho),
        zero,
        splice_ok,
        tuple(float(e) for e in eps),
        integrals,
        divergent,
    )


def osgood_at_infinity(rho: ConcaveModulus, decades=tuple(range(2, 302, 20)), growth_threshold: float = 1e-3):
    """Numerical shadow of ``int_1^inf du / rho(u) = inf``.

    This is the condition under which ``u = u0 + alpha int_0^t rho(u)`` has a
    global solution for every ``alpha, u0``.  Integrals up to ``10^k`` are
    taken in the variable ``log u``; they must keep growing by more than
    ``growth_threshold`` per block.  Returns ``(integrals, divergent)``.
    """
    if float(rho(1.0)) == 0.0 and float(rho(1e300)) == 0.0:
        return (), True
    vals = []
    for k in decades:
        v, _ = quad(lambda s: math.exp(s) / float(rho(math.exp(s))), 0.0, k * math.log(10.0), epsrel=1e-10, limit=400)
        vals.append(v)
    steps = np.diff(vals)
    return tuple(vals), bool(np.all(steps > growth_threshold))
