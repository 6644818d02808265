"""Fractional Brownian motion, Wiener integrals and neutral stochastic
functional differential equations solved by Picard iteration."""

from .errors import (
    ContractError,
    ContractionError,
    ConvergenceError,
    DomainError,
    HypothesisError,
    NsfdeError,
    NumericError,
)

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "ContractionError",
    "ConvergenceError",
    "DomainError",
    "HypothesisError",
    "NsfdeError",
    "NumericError",
    "__version__",
]
