"""Neutral stochastic functional differential equations driven by Q-fBm."""

from .certify import cauchy_certify, fit_moment_constants, moment_bound_certify, u_closed_form
from .hypotheses import NEUTRAL_CONTRACTION, NEUTRAL_GROWTH, validate_hypotheses
from .report import CheckRow, DiagnosticsReport
from .scenario import (
    Coefficients,
    DelayFunction,
    Scenario,
    build,
    constant_lag,
    flagship,
    identity,
    make_coefficients,
    ou_scenario,
    proportional,
    zero_scenario,
)
from .solver import (
    PicardIterate,
    PicardRun,
    delay_stencil,
    initial_iterate,
    mild_map,
    mild_map_eval,
    neutral_inner_solve,
    picard_run,
    stochastic_convolution,
    window_steps,
)

__all__ = [
    "Coefficients",
    "DelayFunction",
    "Scenario",
    "build",
    "constant_lag",
    "flagship",
    "identity",
    "make_coefficients",
    "ou_scenario",
    "proportional",
    "zero_scenario",
    "PicardIterate",
    "PicardRun",
    "delay_stencil",
    "initial_iterate",
    "mild_map",
    "mild_map_eval",
    "neutral_inner_solve",
    "picard_run",
    "stochastic_convolution",
    "window_steps",
    "cauchy_certify",
    "fit_moment_constants",
    "moment_bound_certify",
    "u_closed_form",
    "NEUTRAL_CONTRACTION",
    "NEUTRAL_GROWTH",
    "validate_hypotheses",
    "CheckRow",
    "DiagnosticsReport",
]
