from __future__ import annotations

from typing import Any, Optional


class LocalMaxException(Exception):
    pass


class LocalMaxConfigurationException(LocalMaxException):
    pass


class LocalMaxUsageException(LocalMaxConfigurationException):
    pass


class LocalMaxNumericInputException(LocalMaxException):
    pass


class LocalMaxNumericException(LocalMaxException):
    pass


class LocalMaxTrainingDivergedException(LocalMaxNumericException):
    def __init__(self, message: str, last_good_state: Optional[Any] = None):
        super().__init__(message)
        self.last_good_state = last_good_state


class LocalMaxInternalException(LocalMaxException):
    pass


class LocalMaxReadCheckpointException(LocalMaxException):
    pass


class LocalMaxWriteCheckpointException(LocalMaxException):
    pass


class LocalMaxDatasetException(LocalMaxException):
    pass


class LocalMaxCsvParseException(LocalMaxDatasetException):
    def __init__(self, message: str, row: int, column: Optional[str]):
        super().__init__(message)
        self.row = row
        self.column = column


class LocalMaxInfeasibleSamplingException(LocalMaxDatasetException):
    pass


class LocalMaxEvaluationException(LocalMaxException):
    pass


class LocalMaxTheoryException(LocalMaxException):
    pass
