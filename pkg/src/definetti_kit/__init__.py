"""Numerical checks for de Finetti representations on infinite-dimensional systems."""

from .definetti import (VectorFamily, build_vector_family, definetti_decompose, overlap_tail_check,
                        qubit_design_family, theorem1_decompose, tolerance_from)
from .errors import (BoundViolation, DefinettiKitError, DomainError, InfeasibleError, NumericalError,
                     PreconditionError, ResourceGuardError, TruncationError)
from .gamma import GammaInstance, GammaResult, gamma, verify_lemma2
from .logvalue import LogValue
from .qkd_budget import BudgetReport, compose_budget, find_min_m, min_entropy_rate

__version__ = "0.1.0"

__all__ = [
    "BoundViolation", "BudgetReport", "DefinettiKitError", "DomainError", "GammaInstance", "GammaResult",
    "InfeasibleError", "LogValue", "NumericalError", "PreconditionError", "ResourceGuardError",
    "TruncationError", "VectorFamily", "build_vector_family", "compose_budget", "definetti_decompose",
    "find_min_m", "gamma", "min_entropy_rate", "overlap_tail_check", "qubit_design_family",
    "theorem1_decompose", "tolerance_from", "verify_lemma2",
]
