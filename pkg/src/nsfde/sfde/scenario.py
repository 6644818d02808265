"""Problem instances for the neutral delay equation

    d[x(t) + g(t, x(rho(t)))] = [A x(t) + f(t, x(rho(t)))] dt + sigma(t) dB^H(t),
    x(t) = phi(t) on [-r, 0],

in the spectral coordinates of :mod:`nsfde.semigroup`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .. import bihari
from ..bihari import ConcaveModulus
from ..errors import ContractError, DomainError
from ..fbm_core import TimeGrid, check_hurst
from ..hilbert import TraceClassQ
from ..semigroup import SpectralGenerator

__all__ = [
    "DelayFunction",
    "Coefficients",
    "Scenario",
    "constant_lag",
    "proportional",
    "identity",
    "delay_by_name",
    "omega_log",
    "log_drift_constants",
    "make_coefficients",
    "make_phi",
    "flagship",
    "zero_scenario",
    "ou_scenario",
]


@dataclass(frozen=True)
class DelayFunction:
    """Registered delay ``rho``; evaluate with ``rho(t)`` on arrays of times."""

    kind: str
    param: float = 0.0

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "constant_lag":
            return np.maximum(t - self.param, -self.param)
        if self.kind == "proportional":
            return self.param * t
        if self.kind == "identity":
            return t.copy()
        raise DomainError(f"unknown delay kind {self.kind!r}")


def constant_lag(r: float) -> DelayFunction:
    if r < 0:
        raise DomainError("lag must be non-negative")
    return DelayFunction("constant_lag", float(r))


def proportional(q: float) -> DelayFunction:
    if not 0 < q <= 1:
        raise DomainError("proportional delay needs 0 < q <= 1")
    return DelayFunction("proportional", float(q))


def identity() -> DelayFunction:
    return DelayFunction("identity")


def delay_by_name(name: str, r: float, q: float) -> DelayFunction:
    if name == "constant_lag":
        return constant_lag(r)
    if name == "proportional":
        return proportional(q)
    if name == "identity":
        return identity()
    raise DomainError(f"unknown delay {name!r}")


@dataclass(frozen=True)
class Coefficients:
    """Drift ``f``, neutral term in the form ``g_beta = (-A)^beta g``, noise ``sigma``.

    ``modulus_K`` bounds ``||f(t, x)||^2`` by ``K(||x||^2)`` and
    ``modulus_G`` bounds ``||f(t, x) - f(t, y)||^2`` by ``G(||x - y||^2)``.
    ``l`` and ``m_g`` are the growth and Lipschitz constants of ``g_beta``.
    Moduli do not depend on ``t``.
    """

    f: Callable
    g_beta: Callable
    sigma: Callable
    modulus_K: ConcaveModulus
    modulus_G: ConcaveModulus
    l: float
    m_g: float
    beta: float
    f_zero: bool = False
    g_zero: bool = False
    label: str = ""

    def __post_init__(self):
        if not 0.5 < self.beta < 1:
            raise DomainError(f"beta must lie in (1/2, 1), got {self.beta}")
        if self.l < 0 or self.m_g < 0:
            raise DomainError("l and M_g must be non-negative")


def omega_log(z):
    """Odd non-Lipschitz profile ``sign(z) w(|z|)`` with ``w(d) = d sqrt(log 1/d)``
    up to ``1/e`` and slope ``1/2`` beyond (the C^1 continuation)."""
    z = np.asarray(z, dtype=float)
    d = np.abs(z)
    edge = math.exp(-1.0)
    small = d <= edge
    safe = np.where(small & (d > 0), d, 1.0)
    w = np.where(small, np.where(d > 0, safe * np.sqrt(-np.log(safe)), 0.0), edge + 0.5 * (d - edge))
    return np.sign(z) * w


def log_drift_constants(a: float, delta: float = 0.1, safety: float = 1.02):
    """Moduli for ``f(x) = a v omega_log(<w, x>)`` with unit vectors ``v, w``.

    Concavity of ``w`` gives ``|omega(z1) - omega(z2)| <= 2 w(|z1 - z2| / 2)``, so
    ``||f(x) - f(y)||^2 <= 4 a^2 w(sqrt(u)/2)^2`` with ``u = ||x - y||^2``; the
    smallest ``c`` with ``4 w(sqrt(u)/2)^2 <= c lambda_2(u)`` is found on a
    dense lattice and inflated by ``safety``.  Growth: ``w(d)^2 <= e^{-2}/2 + d^2/2``.
    Returns ``(K, G)``.
    """
    u = np.geomspace(1e-300, 1e12, 20001)
    num = 4.0 * omega_log(0.5 * np.sqrt(u)) ** 2
    c = safety * float(np.max(num / bihari.log_splice(delta)(u)))
    a2 = a * a
    return bihari.affine(a2 * math.exp(-2.0), 0.5 * a2), bihari.log_splice(delta, a2 * c)


def make_coefficients(
    n_modes: int,
    drift: str = "log_splice",
    drift_scale: float = 1.0,
    neutral: str = "tanh",
    kappa: float = 0.3,
    sigma_scale: float = 0.5,
    beta: float = 0.75,
    delta: float = 0.1,
) -> Coefficients:
    """Registered coefficient families.

    drift: ``zero``, ``linear`` (``f = -a x``), ``log_splice`` (``f = a v omega_log(<v, x>)``)
    neutral: ``zero``, ``linear`` (``g_beta = kappa x``), ``tanh`` (``g_beta = kappa tanh(x)``)
    """
    a = float(drift_scale)
    v = np.ones(n_modes) / math.sqrt(n_modes)
    if drift == "zero":
        f = lambda t, x: np.zeros_like(x)  # noqa: E731
        k_mod = g_mod = bihari.linear(0.0)
    elif drift == "linear":
        f = lambda t, x: -a * x  # noqa: E731
        k_mod = g_mod = bihari.linear(a * a)
    elif drift == "log_splice":
        f = lambda t, x: a * omega_log(x @ v)[..., None] * v  # noqa: E731
        k_mod, g_mod = log_drift_constants(a, delta)
    else:
        raise DomainError(f"unknown drift {drift!r}")

    if neutral == "zero":
        g = lambda t, x: np.zeros_like(x)  # noqa: E731
        kappa = 0.0
    elif neutral == "linear":
        g = lambda t, x: kappa * x  # noqa: E731
    elif neutral == "tanh":
        g = lambda t, x: kappa * np.tanh(x)  # noqa: E731
    else:
        raise DomainError(f"unknown neutral term {neutral!r}")

    sig = sigma_scale * np.eye(n_modes)
    sig.setflags(write=False)
    return Coefficients(
        f=f,
        g_beta=g,
        sigma=lambda t: sig,
        modulus_K=k_mod,
        modulus_G=g_mod,
        l=kappa * kappa,
        m_g=abs(kappa),
        beta=beta,
        f_zero=(drift == "zero" or a == 0.0),
        g_zero=(kappa == 0.0),
        label=f"drift={drift}({a:g}) neutral={neutral}({kappa:g})",
    )


def make_phi(kind: str, n_modes: int, r: float, n_hist: int, scale: float = 1.0) -> np.ndarray:
    """Deterministic initial path on the ``n_hist + 1`` history nodes ``-r .. 0``."""
    t = np.linspace(-r, 0.0, n_hist + 1)
    shape = 1.0 / np.arange(1, n_modes + 1)
    if kind == "zero":
        return np.zeros((n_hist + 1, n_modes))
    if kind == "constant":
        return scale * np.broadcast_to(shape, (n_hist + 1, n_modes)).copy()
    if kind == "cosine":
        return scale * np.cos(math.pi * t)[:, None] * shape
    raise DomainError(f"unknown initial datum {kind!r}")


@dataclass(frozen=True)
class Scenario:
    """Everything a Picard run needs.

    The time grid is uniform on ``[-r, T]`` with step ``T / n_steps``; ``r``
    must be a whole number of steps.  ``phi`` holds the history nodes.
    """

    h: float
    t_end: float
    r: float
    rho: DelayFunction
    gen: SpectralGenerator
    q: TraceClassQ
    coeffs: Coefficients
    phi: np.ndarray
    n_steps: int = 64
    n_paths: int = 2000
    seed: int = 0
    picard_tol: float = 1e-10
    inner_tol: float = 1e-20
    max_iters: int = 15
    max_inner_iters: int = 200
    x0: str = "neutral"
    keep_paths: int = 4
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        check_hurst(self.h)
        if self.r < 0:
            raise DomainError("delay horizon r must be non-negative")
        hist = self.r / self.dt
        if abs(hist - round(hist)) > 1e-9:
            raise ContractError(f"r = {self.r} is not a multiple of the step {self.dt}")
        n = self.gen.n_modes
        if self.q.n_modes != n:
            raise ContractError("Q and the generator disagree on the number of modes")
        phi = np.asarray(self.phi, dtype=float)
        if phi.shape != (self.n_hist + 1, n):
            raise ContractError(f"phi must have shape {(self.n_hist + 1, n)}, got {phi.shape}")
        phi = phi.copy()
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        if self.x0 not in ("neutral", "zero", "constant"):
            raise DomainError(f"unknown x0 choice {self.x0!r}")
        if self.picard_tol <= 0 or self.inner_tol <= 0:
            raise DomainError("tolerances must be positive")

    @property
    def n_modes(self) -> int:
        return self.gen.n_modes

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.t_end, self.n_steps)

    @property
    def n_hist(self) -> int:
        return int(round(self.r / self.dt))

    @property
    def nodes(self) -> np.ndarray:
        """All nodes ``-r .. T``."""
        return (np.arange(self.n_hist + self.n_steps + 1) - self.n_hist) * self.dt

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def _base(n_modes, t_end, r, n_steps, **kw):
    dt = t_end / n_steps
    n_hist = int(round(r / dt))
    phi_kind = kw.pop("phi", "cosine")
    phi_scale = kw.pop("phi_scale", 1.0)
    mu_scale = kw.pop("mu_scale", 1.0)
    q_decay = kw.pop("q_decay", 2.0)
    q_scale = kw.pop("q_scale", 1.0)
    gen = SpectralGenerator(mu_scale * np.arange(1, n_modes + 1, dtype=float) ** 2)
    q = TraceClassQ.power_law(n_modes, q_decay, q_scale)
    phi = make_phi(phi_kind, n_modes, r, n_hist, phi_scale)
    return gen, q, phi


def flagship(**overrides) -> Scenario:
    """Non-Lipschitz drift, tanh neutral term, constant lag: the headline run."""
    params = dict(
        h=0.75, t_end=1.0, r=0.25, n_modes=8, n_steps=64, n_paths=2000, seed=20240601,
        drift="log_splice", drift_scale=3.0, neutral="tanh", kappa=0.3, sigma_scale=0.5,
        beta=0.75, delay="constant_lag", delay_q=0.5, phi="cosine", phi_scale=0.2,
    )
    params.update(overrides)
    return build(params)


def zero_scenario(**overrides) -> Scenario:
    params = dict(
        h=0.75, t_end=1.0, r=0.25, n_modes=4, n_steps=32, n_paths=16, seed=1,
        drift="zero", neutral="zero", sigma_scale=0.0, delay="constant_lag",
    )
    params.update(overrides)
    return build(params)


def ou_scenario(**overrides) -> Scenario:
    """Scalar fBm Ornstein-Uhlenbeck process started at 0."""
    params = dict(
        h=0.75, t_end=1.0, r=0.0, n_modes=1, n_steps=64, n_paths=10_000, seed=7,
        drift="zero", neutral="zero", sigma_scale=1.0, mu_scale=2.0, phi="zero", delay="identity",
    )
    params.update(overrides)
    return build(params)


_SCENARIO_KEYS = (
    "h", "t_end", "r", "n_steps", "n_paths", "seed", "picard_tol", "inner_tol",
    "max_iters", "max_inner_iters", "x0", "keep_paths",
)


def build(params: dict) -> Scenario:
    """Assemble a :class:`Scenario` from flat parameters (the config-file keys)."""
    p = dict(params)
    n_modes = int(p.pop("n_modes", 8))
    t_end = float(p.get("t_end", 1.0))
    r = float(p.get("r", 0.0))
    n_steps = int(p.get("n_steps", 64))
    base_kw = {k: p.pop(k) for k in ("phi", "phi_scale", "mu_scale", "q_decay", "q_scale") if k in p}
    gen, q, phi = _base(n_modes, t_end, r, n_steps, **base_kw)
    coeffs = make_coefficients(
        n_modes,
        drift=p.pop("drift", "zero"),
        drift_scale=float(p.pop("drift_scale", 1.0)),
        neutral=p.pop("neutral", "zero"),
        kappa=float(p.pop("kappa", 0.0)),
        sigma_scale=float(p.pop("sigma_scale", 0.0)),
        beta=float(p.pop("beta", 0.75)),
        delta=float(p.pop("modulus_delta", 0.1)),
    )
    rho = delay_by_name(p.pop("delay", "constant_lag"), r, float(p.pop("delay_q", 0.5)))
    kwargs = {k: p.pop(k) for k in _SCENARIO_KEYS if k in p}
    if p:
        raise DomainError(f"unknown scenario parameter {sorted(p)[0]!r}")
    return Scenario(rho=rho, gen=gen, q=q, coeffs=coeffs, phi=phi, **kwargs)
