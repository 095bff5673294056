"""Custom exceptions for the cache cluster simulator."""

from typing import Optional


class SimulationError(Exception):
    """Base exception for simulator errors."""
    def __init__(self, code: str, message: str, suggestion: Optional[str] = None):
        self.code = code
        self.message = message
        self.suggestion = suggestion
        super().__init__(self.message)


class InvalidParameterError(SimulationError):
    """Raised when parameters are invalid."""
    def __init__(self, message: str, suggestion: Optional[str] = None):
        super().__init__(
            code="INVALID_PARAMETER",
            message=message,
            suggestion=suggestion or "Check the parameter values and ranges",
        )


class PlacementInfeasibleError(SimulationError):
    """Raised when a placement cannot put every required sub-file copy on a cache."""
    def __init__(self, content: int, message: Optional[str] = None):
        self.content = content
        super().__init__(
            code="PLACEMENT_INFEASIBLE",
            message=message or f"No cache can take another sub-file of content {content}",
            suggestion="Increase storage k or the cache count m, or lower the service limit a",
        )


class ConsistencyError(SimulationError):
    """Raised when a plan, assignment or outcome breaks one of its invariants."""
    def __init__(self, message: str):
        super().__init__(
            code="INTERNAL_CONSISTENCY",
            message=message,
            suggestion="This is a bug; please report the configuration and seed",
        )


class OutputError(SimulationError):
    """Raised when results cannot be written."""
    def __init__(self, message: str):
        super().__init__(
            code="OUTPUT_ERROR",
            message=message,
            suggestion="Check that the output path exists and is writable",
        )
