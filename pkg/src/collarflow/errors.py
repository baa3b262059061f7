"""Exception types shared across the package."""


class CollarFlowError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CollarFlowError):
    """Invalid chart, flow, or experiment parameters."""


class SingularMetricError(CollarFlowError):
    """Metric lost positive definiteness; message carries node coordinates."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class LinearSolveError(CollarFlowError):
    """Implicit solve failed."""


class DivergenceError(CollarFlowError):
    """Picard iteration failed to contract; the report is still attached."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class FitRejectedError(CollarFlowError):
    """Decay-rate fit rejected (non-monotone energy in the window)."""
