"""Certification of the Picard sequence against the Cauchy and moment inequalities.

The generic constants of the a-priori estimates are not known in closed
form.  They are measured: ``M1`` is the smallest constant for which every
computed step satisfies
``d_{n+1,n}(t) <= M1 int_0^t G(d_{n,n-1}(s)) ds``, and ``(D0, M2)`` are fitted
to ``S_{n+1}(t) <= D0 + M2 int_0^t K(S_n(s)) ds`` with ``S_n`` the running
second moment.  The bound ``u`` is then integrated and compared with every
iterate.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .hypotheses import rk4_modulus
from .report import CheckRow, exact, flag

__all__ = ["cauchy_certify", "moment_bound_certify", "u_closed_form", "fit_moment_constants"]

MC_SIGMAS = 3.0


def _rel_se(value, se):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(value > 0, se / np.where(value > 0, value, 1.0), 0.0)


def cauchy_certify(run) -> list:
    s = run.scenario
    nh = s.n_hist
    d = run.cauchy
    rows = []
    if d.shape[0] == 0:
        return rows
    d_end = d[:, -1]
    later = d_end[2:]
    if later.size >= 2:
        ratios = later[1:] / np.where(later[:-1] > 0, later[:-1], np.inf)
        worst = float(np.max(ratios))
        rows.append(CheckRow("cauchy d(T) strictly decreasing n>=2", worst, 1.0, 1.0 - worst, bool(np.all(np.diff(later) < 0))))
    else:
        rows.append(flag("cauchy d(T) strictly decreasing n>=2", True, "fewer than two steps past n=2"))
    rows.append(exact("cauchy d(T) < picard_tol", float(d_end[-1]), s.picard_tol, strict=True))

    # smallest M1 with d_n(t) <= M1 int_0^t G(d_{n-1})
    t = s.grid.nodes
    g_mod = s.coeffs.modulus_G
    m1 = 0.0
    for n in range(1, d.shape[0]):
        integral = cumulative_trapezoid(g_mod(d[n - 1, nh:]), t, initial=0.0)
        num = d[n, nh:]
        ok = (integral > 0) & (num > 0)
        if np.any(ok):
            m1 = max(m1, float(np.max(num[ok] / integral[ok])))
        if np.any((integral == 0) & (num > 0)):
            m1 = math.inf
    run.report.constants["M1"] = m1
    if g_mod.kind == "linear" and d.shape[0] >= 2 and math.isfinite(m1):
        big_l = g_mod.params[0]
        d0 = d_end[0]
        rel = _rel_se(d_end, run.cauchy_se[:, -1])
        worst, ok = 0.0, True
        for n in range(1, d.shape[0]):
            env = (m1 * big_l * s.t_end) ** n / math.factorial(n) * d0
            if env > 0:
                worst = max(worst, d_end[n] / env)
            ok &= bool(d_end[n] <= env * (1.0 + MC_SIGMAS * rel[n]))
        rows.append(CheckRow("cauchy envelope (M1 L T)^n/n! d_10", worst, 1.0, float(MC_SIGMAS * np.max(rel)), ok))
    return rows


def u_closed_form(modulus, u0: float, alpha: float, t):
    """Exact solution of ``u' = alpha K(u)`` for linear and affine ``K``."""
    t = np.asarray(t, dtype=float)
    if modulus.kind == "linear":
        return u0 * np.exp(alpha * modulus.params[0] * t)
    if modulus.kind == "affine":
        a, big_l = modulus.params
        if big_l == 0:
            return u0 + alpha * a * t
        return (u0 + a / big_l) * np.exp(alpha * big_l * t) - a / big_l
    raise NotImplementedError(f"no closed form for {modulus.kind}")


def fit_moment_constants(run, n_candidates: int = 41):
    """Scan ``D0`` and return ``(D0, M2, u0, u)`` with the smallest area under ``u``."""
    s = run.scenario
    nh = s.n_hist
    t = s.grid.nodes
    k_mod = s.coeffs.modulus_K
    sup = np.array([it.running_moment[nh:] for it in run.iterates])
    s0 = float(np.max(sup[:, 0]))
    smax = float(np.max(sup[:, -1]))
    x0_sup = float(sup[0, -1])
    integrals = np.array([cumulative_trapezoid(k_mod(row), t, initial=0.0) for row in sup[:-1]])
    best = None
    for d0 in np.linspace(s0, max(smax, s0), n_candidates):
        num = sup[1:] - d0
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(integrals > 0, num / np.where(integrals > 0, integrals, 1.0), np.where(num > 0, np.inf, 0.0))
        m2 = max(0.0, float(np.max(ratio)))
        if not math.isfinite(m2):
            continue
        u0 = max(d0, x0_sup)
        u = rk4_modulus(k_mod, u0, m2, s.t_end, s.n_steps)
        if best is None or np.sum(u) < np.sum(best[3]):
            best = (float(d0), m2, u0, u)
    return best


def moment_bound_certify(run) -> list:
    s = run.scenario
    nh = s.n_hist
    rows = []
    d0, m2, u0, u = fit_moment_constants(run)
    run.report.constants["D0"] = d0
    run.report.constants["M2"] = m2
    run.report.constants["u0"] = u0
    run.extra["u"] = u
    worst, ok, worst_margin = 0.0, True, 0.0
    for it in run.iterates:
        sup = it.running_moment[nh:]
        arg = np.maximum.accumulate(np.where(it.moment == it.running_moment, np.arange(it.moment.size), 0))[nh:]
        rel = _rel_se(sup, it.moment_se[arg])
        ratio = sup / u
        worst = max(worst, float(np.max(ratio)))
        worst_margin = max(worst_margin, float(np.max(MC_SIGMAS * rel)))
        ok &= bool(np.all(sup <= u * (1.0 + MC_SIGMAS * rel)))
    rows.append(CheckRow("moment sup E|x^n|^2 <= u(t)", worst, 1.0, worst_margin, ok))
    if s.coeffs.modulus_K.kind in ("linear", "affine"):
        exact_u = u_closed_form(s.coeffs.modulus_K, u0, m2, s.grid.nodes)
        err = float(np.max(np.abs(u - exact_u) / np.maximum(np.abs(exact_u), 1e-300)))
        rows.append(exact("moment u RK4 vs closed form", err, 1e-6))
    return rows
