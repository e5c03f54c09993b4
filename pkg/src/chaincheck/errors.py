"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations

from typing import Any, List, Optional


class ChainCheckError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ChainCheckError, ValueError):
    pass


class LibraryBuildError(ChainCheckError):
    pass


class ClassificationError(ChainCheckError):
    def __init__(self, message: str, raw_response: str = ""):
        super().__init__(message)
        self.raw_response = raw_response


class ChainTooLongError(ChainCheckError):
    def __init__(self, length: int, limit: int):
        super().__init__(f"chain of length {length} exceeds enumeration limit {limit}")
        self.length = length
        self.limit = limit


class ExtractionError(ChainCheckError):
    def __init__(self, message: str, raw_response: str = ""):
        super().__init__(message)
        self.raw_response = raw_response


class NoEntityError(ChainCheckError):
    pass


class DecompositionError(ChainCheckError):
    def __init__(self, message: str, attempt_errors: Optional[List[Exception]] = None):
        super().__init__(message)
        self.attempt_errors = list(attempt_errors or [])


class HopResolutionError(ChainCheckError):
    pass


class ResolutionError(ChainCheckError):
    """Raised by ``answer``; carries whatever trace was built before the failure."""

    def __init__(self, message: str, partial_trace: Any = None):
        super().__init__(message)
        self.partial_trace = partial_trace


class BackendError(ChainCheckError):
    def __init__(self, message: str, retries: int = 0):
        super().__init__(message)
        self.retries = retries


class UnscriptedPromptError(BackendError):
    pass


class FixtureError(ChainCheckError):
    pass


class DatasetError(ChainCheckError):
    def __init__(self, message: str, case_index: Optional[int] = None):
        if case_index is not None:
            message = f"case {case_index}: {message}"
        super().__init__(message)
        self.case_index = case_index


class ConfigError(ChainCheckError):
    pass
