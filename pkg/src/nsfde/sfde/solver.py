"""Mild-solution map, neutral inner solve and the Picard run.

Discretization (per spectral mode ``mu``, step ``dt``, ``E = exp(-mu dt)``):

* the delayed state ``x(rho(t_k))`` is linearly interpolated between nodes;
* on each cell the drift and ``g_beta`` are held at the average of their
  endpoint values and the kernels are integrated exactly, which gives
  ``F_k = E F_{k-1} + (1-E)/mu * avg(f)`` and
  ``G_k = E G_{k-1} + mu^{-beta} (1-E) * avg(g_beta)``;
* the stochastic convolution uses the cell mean of ``exp(-mu (t_k - s))``:
  ``S_k = E S_{k-1} + (1-E)/(mu dt) * sigma(mid) dB^H``.

Then ``x_k = exp(-mu t_k)(phi(0) + mu^{-beta} g_beta(0, phi(rho(0)))) -
mu^{-beta} g_beta(t_k, x(rho(t_k))) + G_k + F_k + S_k``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, ContractionError, ConvergenceError, HypothesisError
from ..hilbert import sample_qfbm
from ..mcstats import mean_se
from ..semigroup import contraction_gamma
from .hypotheses import validate_hypotheses
from .report import CheckRow, DiagnosticsReport, exact, flag
from .scenario import Scenario

__all__ = [
    "DelayStencil",
    "InnerResult",
    "PicardIterate",
    "PicardRun",
    "delay_stencil",
    "stochastic_convolution",
    "mild_map",
    "mild_map_eval",
    "neutral_inner_solve",
    "initial_iterate",
    "window_steps",
    "picard_run",
]


@dataclass(frozen=True)
class DelayStencil:
    """``x(rho(t_k)) = (1 - w[k]) X[lo[k]] + w[k] X[lo[k] + 1]`` on the full grid."""

    lo: np.ndarray
    w: np.ndarray
    implicit: np.ndarray

    def apply(self, values, k=None):
        hi = np.minimum(self.lo + 1, values.shape[1] - 1)
        if k is None:
            w = self.w[None, :, None]
            return (1.0 - w) * values[:, self.lo] + w * values[:, hi]
        a, b, w = self.lo[k], hi[k], self.w[k]
        if w == 0.0:
            return values[:, a]
        return (1.0 - w) * values[:, a] + w * values[:, b]


def delay_stencil(s: Scenario) -> DelayStencil:
    t = s.grid.nodes
    pos = (s.rho(t) + s.r) / s.dt
    lo = np.floor(pos + 1e-9).astype(int)
    w = pos - lo
    w[np.abs(w) < 1e-9] = 0.0
    lo = np.clip(lo, 0, None)
    own = s.n_hist + np.arange(t.size)
    reach = lo + (w > 0)
    if np.any(reach > own) or np.any(pos < -1e-9):
        raise ContractError("delay reaches outside [-r, t]; check the delay hypothesis")
    implicit = reach == own
    implicit[0] = False  # x(0) = phi(0) is data
    return DelayStencil(lo, w, implicit)


def stochastic_convolution(s: Scenario) -> np.ndarray:
    """``int_0^t T(t-s) sigma(s) dB^H(s)`` at the nodes of ``[0, T]``, shape ``(P, n+1, N)``.

    It does not depend on the Picard index and is computed once per run.
    """
    n, p, dim = s.n_steps, s.n_paths, s.n_modes
    out = np.zeros((p, n + 1, dim))
    mids = (np.arange(n) + 0.5) * s.dt
    sig = np.stack([s.coeffs.sigma(t) for t in mids])
    if not np.any(sig):
        return out
    db = sample_qfbm(s.grid, s.h, s.q, p, s.seed).increments()
    mu = s.gen.mu
    e = np.exp(-mu * s.dt)
    weight = -np.expm1(-mu * s.dt) / (mu * s.dt)
    for k in range(1, n + 1):
        out[:, k] = e * out[:, k - 1] + weight * (db[:, k - 1] @ sig[k - 1].T)
    return out


def _drift_convolution(s: Scenario, fvals: np.ndarray) -> np.ndarray:
    mu = s.gen.mu
    e = np.exp(-mu * s.dt)
    weight = -np.expm1(-mu * s.dt) / mu
    out = np.zeros_like(fvals)
    for k in range(1, fvals.shape[1]):
        out[:, k] = e * out[:, k - 1] + weight * 0.5 * (fvals[:, k - 1] + fvals[:, k])
    return out


def _drift_values(s: Scenario, values: np.ndarray, stencil: DelayStencil) -> np.ndarray:
    if s.coeffs.f_zero:
        return np.zeros((values.shape[0], s.n_steps + 1, s.n_modes))
    delayed = stencil.apply(values)
    t = s.grid.nodes
    return np.stack([s.coeffs.f(t[k], delayed[:, k]) for k in range(t.size)], axis=1)


def _free_term(s: Scenario, g0: np.ndarray) -> np.ndarray:
    # exp(-mu t_k) (phi(0) + mu^{-beta} g_beta(0, phi(rho(0)))), shape (P, n+1, N)
    mu = s.gen.mu
    c0 = s.phi[-1] + mu ** -s.coeffs.beta * g0
    return np.exp(-np.outer(s.grid.nodes, mu))[None] * c0[:, None, :]


def _g_values(s: Scenario, values: np.ndarray, stencil: DelayStencil) -> np.ndarray:
    delayed = stencil.apply(values)
    t = s.grid.nodes
    return np.stack([s.coeffs.g_beta(t[k], delayed[:, k]) for k in range(t.size)], axis=1)


def mild_map(s: Scenario, prev: np.ndarray, current: np.ndarray, sconv: np.ndarray, stencil=None) -> np.ndarray:
    """Right-hand side of the Picard step on ``[0, T]``.

    ``f`` is evaluated on ``prev`` (the ``x^n`` slot), ``g`` on ``current``
    (the ``x^{n+1}`` slot).  Arrays are on the full grid ``[-r, T]``.
    """
    stencil = delay_stencil(s) if stencil is None else stencil
    mu, beta = s.gen.mu, s.coeffs.beta
    fconv = _drift_convolution(s, _drift_values(s, prev, stencil))
    gb = _g_values(s, current, stencil)
    e = np.exp(-mu * s.dt)
    gw = mu**-beta * -np.expm1(-mu * s.dt)
    gconv = np.zeros_like(gb)
    for k in range(1, gb.shape[1]):
        gconv[:, k] = e * gconv[:, k - 1] + gw * 0.5 * (gb[:, k - 1] + gb[:, k])
    return _free_term(s, gb[:, 0]) - mu**-beta * gb + gconv + fconv + sconv


def mild_map_eval(s: Scenario, prev, sconv, t: float, current=None) -> np.ndarray:
    """The mild map at one node ``t`` of ``[0, T]``, one row per path."""
    k = s.grid.index_of(t)
    return mild_map(s, prev, prev if current is None else current, sconv)[:, k]


def window_steps(s: Scenario, cap: float = 0.9) -> int:
    """Largest number of steps ``m`` with ``gamma(m dt) <= cap`` (at least 1)."""
    c = s.coeffs
    if c.g_zero:
        return s.n_steps
    m = s.n_steps
    while m > 1 and contraction_gamma(s.gen, c.beta, c.m_g, m * s.dt) > cap:
        m -= 1
    return m


@dataclass(frozen=True)
class InnerResult:
    values: np.ndarray
    passes: int
    rate: float
    window: int


def neutral_inner_solve(
    s: Scenario, rhs: np.ndarray, warm_start: np.ndarray, stencil: DelayStencil | None = None
) -> InnerResult:
    """Resolve ``x^{n+1}`` inside ``g`` by forward Gauss-Seidel sweeps over windows.

    ``rhs`` holds the terms that do not involve ``g`` (free term with the
    ``phi(0)`` part only, drift and noise convolutions) on ``[0, T]``.
    A window whose nodes are all explicit is done after one pass.  Otherwise
    sweeps repeat until the largest change ``E||dx||^2`` drops below
    ``inner_tol``; ``rate`` is the largest ratio of successive changes.
    """
    stencil = delay_stencil(s) if stencil is None else stencil
    mu, beta = s.gen.mu, s.coeffs.beta
    nh, n = s.n_hist, s.n_steps
    t = s.grid.nodes
    e = np.exp(-mu * s.dt)
    gw = mu**-beta * -np.expm1(-mu * s.dt)
    scale = mu**-beta
    x = np.array(warm_start, dtype=float, copy=True)
    x[:, : nh + 1] = s.phi
    if s.coeffs.g_zero:
        x[:, nh + 1 :] = rhs[:, 1:]
        return InnerResult(x, 1, 0.0, n)
    gb = np.zeros_like(rhs)
    gb[:, 0] = s.coeffs.g_beta(0.0, stencil.apply(x, 0))
    gconv = np.zeros_like(rhs)
    width = window_steps(s)
    passes_total, worst_rate = 0, 0.0
    for start in range(1, n + 1, width):
        stop = min(start + width, n + 1)
        explicit = not np.any(stencil.implicit[start:stop])
        prev_change = None
        passes = 0
        while True:
            passes += 1
            change = 0.0
            for k in range(start, stop):
                gb[:, k] = s.coeffs.g_beta(t[k], stencil.apply(x, k))
                gconv[:, k] = e * gconv[:, k - 1] + gw * 0.5 * (gb[:, k - 1] + gb[:, k])
                new = rhs[:, k] - scale * gb[:, k] + gconv[:, k]
                change = max(change, float(np.mean(np.sum((new - x[:, nh + k]) ** 2, axis=-1))))
                x[:, nh + k] = new
            if explicit:
                break
            if prev_change is not None and prev_change > s.inner_tol:
                worst_rate = max(worst_rate, change / prev_change)
            if change < s.inner_tol:
                break
            if passes >= s.max_inner_iters:
                raise ContractionError(
                    f"neutral inner loop did not converge on steps {start}..{stop - 1}; "
                    f"measured rate {worst_rate:.3g}",
                    measured_rate=worst_rate,
                )
            prev_change = change
        passes_total = max(passes_total, passes)
    return InnerResult(x, passes_total, worst_rate, width)


def _phi_rhs(s: Scenario, paths: int, g0_source: np.ndarray, stencil) -> np.ndarray:
    g0 = s.coeffs.g_beta(0.0, stencil.apply(g0_source, 0))
    return _free_term(s, g0) + np.zeros((paths, 1, 1))


def initial_iterate(s: Scenario, paths: int, stencil=None) -> np.ndarray:
    """``x^0`` on the full grid.

    ``neutral``: the equation with drift and noise removed (solved by the
    inner loop); ``zero``: zero after time 0; ``constant``: ``phi(0)`` after 0.
    """
    stencil = delay_stencil(s) if stencil is None else stencil
    nh = s.n_hist
    x = np.zeros((paths, nh + s.n_steps + 1, s.n_modes))
    x[:, : nh + 1] = s.phi
    if s.x0 == "zero":
        return x
    if s.x0 == "constant":
        x[:, nh + 1 :] = s.phi[-1]
        return x
    rhs = _phi_rhs(s, paths, x, stencil)
    return neutral_inner_solve(s, rhs, x, stencil).values


@dataclass(frozen=True)
class PicardIterate:
    """Light record of ``x^n``: moment curve, a few sample paths, and for the
    final iterate of a run the full ``values`` array ``(P, nodes, N)``."""

    index: int
    nodes: np.ndarray
    moment: np.ndarray
    moment_se: np.ndarray
    samples: np.ndarray
    noise_digest: str = ""
    inner_passes: int = 0
    inner_rate: float = 0.0
    values: np.ndarray | None = None

    @property
    def running_moment(self) -> np.ndarray:
        """``sup_{-r <= s <= t} E||x(s)||^2``."""
        return np.maximum.accumulate(self.moment)


@dataclass
class PicardRun:
    scenario: Scenario
    iterates: list
    cauchy: np.ndarray  # (iterations, nodes): running-sup E||x^{n+1} - x^n||^2
    cauchy_se: np.ndarray
    report: DiagnosticsReport
    gamma: float
    window: int
    converged: bool
    noise_digest: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def final(self) -> PicardIterate:
        return self.iterates[-1]

    @property
    def d_end(self) -> np.ndarray:
        """``d_{n+1,n}(T)`` for ``n = 0, 1, ...``."""
        return self.cauchy[:, -1]


def _record(s: Scenario, n: int, x: np.ndarray, digest: str, inner: InnerResult | None, keep_values: bool):
    sq = np.sum(x**2, axis=-1)
    m, se = mean_se(sq, axis=0)
    return PicardIterate(
        index=n,
        nodes=s.nodes,
        moment=m,
        moment_se=se,
        samples=x[: s.keep_paths].copy(),
        noise_digest=digest,
        inner_passes=0 if inner is None else inner.passes,
        inner_rate=0.0 if inner is None else inner.rate,
        values=x if keep_values else None,
    )


def picard_run(s: Scenario, force: bool = False, certify: bool = True, sconv: np.ndarray | None = None) -> PicardRun:
    """Successive approximations until ``sup_t E||x^{n+1} - x^n||^2 < picard_tol``.

    Refuses (``HypothesisError``) when a hypothesis check fails, unless
    ``force``.  Raises ``ConvergenceError`` with the report attached when
    ``max_iters`` steps do not reach the tolerance.
    """
    from .certify import cauchy_certify, moment_bound_certify

    report = validate_hypotheses(s)
    if not report.passed and not force:
        raise HypothesisError("hypotheses violated: " + ", ".join(report.violated), report)
    stencil = delay_stencil(s)
    sconv = stochastic_convolution(s) if sconv is None else sconv
    sconv.setflags(write=False)
    digest = hashlib.blake2b(sconv.tobytes(), digest_size=16).hexdigest()
    p = s.n_paths
    gamma_window = 0.0 if s.coeffs.g_zero else contraction_gamma(s.gen, s.coeffs.beta, s.coeffs.m_g, window_steps(s) * s.dt)
    gamma_full = 0.0 if s.coeffs.g_zero else contraction_gamma(s.gen, s.coeffs.beta, s.coeffs.m_g, s.t_end)

    x = initial_iterate(s, p, stencil)
    iterates = [_record(s, 0, x, digest, None, False)]
    d_rows, d_se = [], []
    worst_rate, converged = 0.0, False
    g0_part = _phi_rhs(s, p, x, stencil)
    for n in range(1, s.max_iters + 1):
        fconv = _drift_convolution(s, _drift_values(s, x, stencil))
        rhs = g0_part + fconv + sconv
        inner = neutral_inner_solve(s, rhs, x, stencil)
        new = inner.values
        worst_rate = max(worst_rate, inner.rate)
        diff, se = mean_se(np.sum((new - x) ** 2, axis=-1), axis=0)
        run_max = np.maximum.accumulate(diff)
        arg = np.maximum.accumulate(np.where(diff == run_max, np.arange(diff.size), 0))
        d_rows.append(run_max)
        d_se.append(se[arg])
        x = new
        iterates.append(_record(s, n, x, digest, inner, False))
        if run_max[-1] < s.picard_tol:
            converged = True
            break
    iterates[-1] = _record(s, iterates[-1].index, x, digest, inner, True)

    run = PicardRun(
        scenario=s,
        iterates=iterates,
        cauchy=np.array(d_rows),
        cauchy_se=np.array(d_se),
        report=report,
        gamma=gamma_window,
        window=window_steps(s),
        converged=converged,
        noise_digest=digest,
    )
    report.constants["gamma(T)"] = gamma_full
    report.constants["gamma(T1)"] = gamma_window
    report.constants["T1"] = run.window * s.dt
    report.constants["inner rate"] = worst_rate
    report.constants["iterations"] = len(iterates) - 1
    report.add(exact("inner window gamma(T1) <= 0.9", gamma_window, 0.9))
    report.add(CheckRow("inner rate <= gamma(T1)", worst_rate, gamma_window, gamma_window - worst_rate, worst_rate <= gamma_window))
    report.add(flag("picard converged", converged, f"picard_tol={s.picard_tol:g}"))
    if certify:
        report.extend(cauchy_certify(run))
        report.extend(moment_bound_certify(run))
    if not converged:
        err = ConvergenceError(
            f"Picard iteration did not reach {s.picard_tol:g} in {s.max_iters} steps "
            f"(last d = {run.d_end[-1]:.3g})",
            report,
        )
        err.run = run
        raise err
    return run
