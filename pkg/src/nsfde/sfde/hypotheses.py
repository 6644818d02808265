"""Numerical checks of the standing hypotheses on a scenario.

Shape properties of the moduli are tested on lattices, the growth and
modulus bounds on random points, and the two neutral-term inequalities
exactly from ``mu_1``, ``beta``, ``M_g`` and ``l``.
"""

from __future__ import annotations

import numpy as np

from .. import rng
from ..bihari import is_midpoint_concave, is_nondecreasing, modulus_check, osgood_at_infinity
from ..semigroup import neg_power_norm
from .report import CheckRow, DiagnosticsReport, exact, flag
from .scenario import Scenario

__all__ = ["validate_hypotheses", "rk4_modulus", "NEUTRAL_CONTRACTION", "NEUTRAL_GROWTH"]

NEUTRAL_CONTRACTION = "neutral contraction 3|(-A)^-b|^2 M_g^2 < 1"
NEUTRAL_GROWTH = "neutral growth 5|(-A)^-b|^2 l < 1"

_SLACK = 1e-9


def rk4_modulus(modulus, u0: float, alpha: float, t_end: float, n_steps: int, substeps: int = 4) -> np.ndarray:
    """Solve ``u' = alpha K(u)``, ``u(0) = u0`` with classical RK4; values at the grid nodes."""
    h = t_end / (n_steps * substeps)
    out = np.empty(n_steps + 1)
    u = float(u0)
    out[0] = u
    k_of = lambda y: alpha * float(modulus(max(y, 0.0)))  # noqa: E731
    for i in range(1, n_steps + 1):
        for _ in range(substeps):
            k1 = k_of(u)
            k2 = k_of(u + 0.5 * h * k1)
            k3 = k_of(u + 0.5 * h * k2)
            k4 = k_of(u + h * k3)
            u += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        out[i] = u
    return out


def _ratio(lhs, rhs):
    # worst lhs/rhs; 0/0 counts as 0 and x/0 with x > 0 as inf
    lhs = np.asarray(lhs)
    rhs = np.asarray(rhs)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > 0, np.inf, 0.0))
    return float(np.max(r))


def _bound_row(name, lhs, rhs, rounding=0.0):
    # ``rounding`` is the floating-point error of ``lhs`` itself, removed before comparing
    worst = _ratio(np.maximum(np.asarray(lhs) - rounding, 0.0), rhs)
    return CheckRow(name, worst, 1.0, _SLACK, worst <= 1.0 + _SLACK)


def _diff_rounding(a, b, squared):
    # error of ||a - b|| when a and b carry relative rounding error ~ eps each
    err = 8.0 * np.finfo(float).eps * (np.sqrt(np.sum(a**2, 1)) + np.sqrt(np.sum(b**2, 1)))
    if not squared:
        return err
    d = np.sqrt(np.sum((a - b) ** 2, 1))
    return 2.0 * d * err + err**2


def _samples(s: Scenario, n: int):
    gen = rng.stream(s.seed, rng.VALIDATION)
    dim = s.n_modes
    t = gen.uniform(0.0, s.t_end, n)
    x = gen.standard_normal((n, dim)) * 10.0 ** gen.uniform(-4, 2, n)[:, None]
    # partners at distances from 1e-8 to 1e1, so the modulus is probed near 0 too
    y = x + gen.standard_normal((n, dim)) * 10.0 ** gen.uniform(-8, 1, n)[:, None]
    return t, x, y


def _eval(fn, t, x):
    return np.stack([fn(ti, xi) for ti, xi in zip(t, x)])


def validate_hypotheses(s: Scenario, n_samples: int = 2000, n_delay: int = 10_000) -> DiagnosticsReport:
    c = s.coeffs
    rep = DiagnosticsReport()
    k_mod, g_mod = c.modulus_K, c.modulus_G

    # growth modulus
    rep.add(flag("growth K nondecreasing", is_nondecreasing(k_mod), k_mod.name))
    rep.add(flag("growth K concave", is_midpoint_concave(k_mod), k_mod.name))
    t, x, y = _samples(s, n_samples)
    fx, fy = _eval(c.f, t, x), _eval(c.f, t, y)
    rep.add(_bound_row("growth |f|^2 <= K(|x|^2)", np.sum(fx**2, 1), k_mod(np.sum(x**2, 1))))
    mids = (np.arange(s.n_steps) + 0.5) * s.dt
    hs = sum(float(np.sum(c.sigma(tm) ** 2 * s.q.eigenvalues)) for tm in mids) * s.dt
    rep.add(flag("noise int |sigma|^2 finite", np.isfinite(hs), f"{hs:.6g}"))
    # global solvability for every alpha is equivalent to int^inf du/K = inf
    _, divergent = osgood_at_infinity(k_mod)
    finite = bool(np.all(np.isfinite(rk4_modulus(k_mod, 1.0, 1.0, s.t_end, s.n_steps))))
    rep.add(flag("growth u = u0 + a int K(u) global", divergent and finite, "int^inf du/K diverges; RK4 at alpha=1 finite"))

    # uniqueness modulus
    rep.add(flag("modulus G nondecreasing", is_nondecreasing(g_mod), g_mod.name))
    rep.add(flag("modulus G concave", is_midpoint_concave(g_mod), g_mod.name))
    rep.add(exact("modulus G(0) = 0", float(g_mod(0.0)), 0.0))
    rep.add(_bound_row("modulus |f(x)-f(y)|^2 <= G(|x-y|^2)", np.sum((fx - fy) ** 2, 1), g_mod(np.sum((x - y) ** 2, 1)), _diff_rounding(fx, fy, True)))
    rep.add(flag("modulus int_0+ dy/G = inf", modulus_check(g_mod).divergent, "numeric divergence over eps 1e-2..1e-10"))

    # neutral term
    gx, gy = _eval(c.g_beta, t, x), _eval(c.g_beta, t, y)
    rep.add(_bound_row("neutral |g_b|^2 <= l(|x|^2+1)", np.sum(gx**2, 1), c.l * (np.sum(x**2, 1) + 1.0)))
    rep.add(_bound_row("neutral |g_b(x)-g_b(y)| <= M_g|x-y|", np.sqrt(np.sum((gx - gy) ** 2, 1)), c.m_g * np.sqrt(np.sum((x - y) ** 2, 1)), _diff_rounding(gx, gy, False)))
    norm2 = neg_power_norm(s.gen, c.beta) ** 2
    rep.add(exact(NEUTRAL_CONTRACTION, 3.0 * norm2 * c.m_g**2, 1.0, strict=True))
    rep.add(exact(NEUTRAL_GROWTH, 5.0 * norm2 * c.l, 1.0, strict=True))

    # delay
    tt = np.linspace(0.0, s.t_end, n_delay)
    rt = s.rho(tt)
    worst = float(max(np.max(-s.r - rt), np.max(rt - tt)))
    rep.add(CheckRow("delay -r <= rho(t) <= t", worst, 0.0, -worst, bool(worst <= 0.0 and np.all(np.isfinite(rt)))))
    return rep
