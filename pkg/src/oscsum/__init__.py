"""Coefficient norms, exponential sums, Gauss sums and discrete Carleson numerics."""
from .errors import BudgetError, DomainError, OscsumError, PreconditionError
from .polycore import Poly, ScaleVec, index_set, torus_norm

__version__ = "0.1.0"

__all__ = ["Poly", "ScaleVec", "index_set", "torus_norm", "OscsumError", "DomainError",
           "PreconditionError", "BudgetError", "__version__"]
