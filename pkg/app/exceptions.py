"""Exceptions raised by the toolkit services."""
from typing import Optional


class GaussianToolkitError(Exception):
    """Base class for every error raised by the services"""


class InvalidDimensionError(GaussianToolkitError, ValueError):
    """Shapes are inconsistent with the declared number of modes"""


class InvalidInputError(GaussianToolkitError, ValueError):
    """Input is well shaped but not acceptable (asymmetric, empty, unsupported)"""


class _PositivityError(GaussianToolkitError):
    """A positive semidefiniteness condition failed"""

    def __init__(self, message: str, min_eigenvalue: Optional[float] = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class InvalidStateError(_PositivityError):
    """Covariance violates the uncertainty relation V + iΩ ≥ 0"""


class InvalidChannelError(_PositivityError):
    """Channel parameters violate complete positivity"""


class InvalidObservableError(_PositivityError):
    """Observable parameters violate B0 - i A0ᵀ Ω A0 ≥ 0"""


class InvalidNoiseError(_PositivityError):
    """Smearing noise is not a valid (Gaussian) probability measure"""


class DecompositionError(GaussianToolkitError):
    """Williamson decomposition impossible for the given matrix"""


class NotInformationallyCompleteError(GaussianToolkitError):
    """Operation needs an informationally complete observable"""


class ConsistencyError(GaussianToolkitError):
    """Internal numerical consistency check failed"""


class ProblemValidationError(GaussianToolkitError):
    """Problem file is structurally valid JSON but cannot be executed"""


class TaskExecutionError(GaussianToolkitError):
    """A task failed while running; carries the index of the failing task and the partial report"""

    def __init__(self, message: str, task_index: int, op: str, partial_report: Optional[dict] = None):
        super().__init__(message)
        self.task_index = task_index
        self.op = op
        self.partial_report = partial_report


class TruncationWarning(UserWarning):
    """Fock-basis truncation weight exceeds the configured threshold"""
