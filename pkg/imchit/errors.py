"""
Error types for imc-hit
Every failure carries a diagnostics mapping that the CLI can emit as JSON
"""

from typing import Any, Dict, Optional

import numpy as np


def _jsonable(value: Any) -> Any:
    """Convert numpy containers and scalars (recursively) into plain JSON types"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, (set, frozenset)):
        return sorted(_jsonable(item) for item in value)
    return value


class ImcHitError(Exception):
    """Base class for all errors raised by the library"""

    def __init__(self, message: str, **diagnostics: Any):
        super().__init__(message)
        self.message = message
        self.diagnostics: Dict[str, Any] = diagnostics

    def to_dict(self) -> Dict[str, Any]:
        """
        Serialize the error for machine consumption

        Returns:
            Dictionary with the error class name, message and diagnostics
        """
        return {
            "error": type(self).__name__,
            "message": self.message,
            "diagnostics": _jsonable(self.diagnostics),
        }


class DomainError(ImcHitError, ValueError):
    """Invalid states, subsets, rows or parameters"""


class SolverError(ImcHitError):
    """Restricted linear solve failed or produced an inconsistent result"""


class NonConvergenceError(SolverError):
    """Iteration cap reached with the fixed-point residual above tolerance"""

    def __init__(self, message: str, trace: Optional[list] = None, **diagnostics: Any):
        super().__init__(message, **diagnostics)
        self.trace = trace or []


class CapacityError(ImcHitError):
    """An enumeration would exceed the configured combination limit"""


class SandwichViolation(ImcHitError):
    """A matrix sampled from the credal set escaped the computed bounds"""


class ExperimentError(ImcHitError):
    """A batch cell aborted"""
