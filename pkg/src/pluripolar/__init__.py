"""Numerical evidence for pluripolarity of graphs of functions on the unit circle."""

__version__ = "0.1.0"

from .circle_functions import CoefficientRule, Family, NormSequence, make_rule, synthetic_norms
from .errors import (
    CertificationError,
    ConvergenceError,
    DegenerateError,
    DomainError,
    PluripolarError,
    RuleError,
    SyntheticRuleError,
)

__all__ = [
    "CertificationError",
    "CoefficientRule",
    "ConvergenceError",
    "DegenerateError",
    "DomainError",
    "Family",
    "NormSequence",
    "PluripolarError",
    "RuleError",
    "SyntheticRuleError",
    "make_rule",
    "synthetic_norms",
]
