"""
Exception hierarchy shared by every layer of the toolkit.

The command line maps these onto exit codes: argument errors to 2,
format errors to 3, numerical failures to 4.
"""


class TensorCompletionError(Exception):
    """Base exception for toolkit errors."""
    pass


class TensorArgumentError(TensorCompletionError, ValueError):
    """Exception raised for invalid modes, shapes, thresholds or inputs."""
    pass


class NumericalError(TensorCompletionError):
    """Exception raised when an inner numerical iteration fails to converge."""

    def __init__(self, message, iterations=None, last_estimate=None):
        super().__init__(message)
        self.iterations = iterations
        self.last_estimate = last_estimate


class NumericalDivergenceError(NumericalError):
    """Exception raised when an iterate becomes non-finite."""
    pass


class DegenerateStateError(TensorCompletionError):
    """Exception raised when the iterate degenerates (e.g. all-zero factors)."""
    pass


class TensorFormatError(TensorCompletionError):
    """Exception raised for malformed tensor files; ``offset`` is the byte position."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
