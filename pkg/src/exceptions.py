"""
Custom exceptions for the ordinal label encoding library.

This module defines all custom exceptions used throughout the package
to avoid circular import issues. Every concrete error also derives from the
matching builtin exception so callers may catch either.
"""

from enum import Enum
from typing import Any, Dict, List, Optional


class ErrorSeverity(Enum):
    """Error severity levels."""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


class ErrorCategory(Enum):
    """Error category types."""
    VALIDATION = "validation"
    CONFIGURATION = "configuration"
    NUMERIC = "numeric"
    IO = "io"
    AGGREGATION = "aggregation"
    SYSTEM = "system"
    UNKNOWN = "unknown"


class OrdinalError(Exception):
    """Base exception class for library errors."""

    def __init__(self, message: str, category: ErrorCategory = ErrorCategory.UNKNOWN,
                 severity: ErrorSeverity = ErrorSeverity.MEDIUM,
                 details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.category = category
        self.severity = severity
        self.details = details or {}
        super().__init__(message)


class ValidationError(OrdinalError, ValueError):
    """Raised when a value type invariant is violated."""

    def __init__(self, message: str, field: Optional[str] = None):
        """
        Initialize validation error.

        Args:
            message: Error message
            field: Field name that failed validation
        """
        super().__init__(message, ErrorCategory.VALIDATION, ErrorSeverity.LOW,
                         {'field': field} if field else None)
        self.field = field


class DimensionError(OrdinalError, ValueError):
    """Raised on invalid dimensions, shape mismatches and length mismatches."""

    def __init__(self, message: str, expected: Any = None, actual: Any = None):
        super().__init__(message, ErrorCategory.VALIDATION, ErrorSeverity.LOW,
                         {'expected': expected, 'actual': actual})
        self.expected = expected
        self.actual = actual


class DomainError(OrdinalError, ValueError):
    """Raised when an input lies outside an operation's domain."""

    def __init__(self, message: str, value: Any = None):
        super().__init__(message, ErrorCategory.VALIDATION, ErrorSeverity.LOW,
                         {'value': value} if value is not None else None)
        self.value = value


class ConfigurationError(OrdinalError, ValueError):
    """Custom exception for configuration-related errors."""

    def __init__(self, message: str, config_key: Optional[str] = None):
        """
        Initialize configuration error.

        Args:
            message: Error message
            config_key: Configuration key that caused the error
        """
        super().__init__(message, ErrorCategory.CONFIGURATION, ErrorSeverity.MEDIUM,
                         {'config_key': config_key} if config_key else None)
        self.config_key = config_key


class InfeasibleError(OrdinalError, ValueError):
    """Raised when a requested enumeration cannot be satisfied."""

    def __init__(self, message: str):
        super().__init__(message, ErrorCategory.VALIDATION, ErrorSeverity.LOW)


class ClassIndexError(OrdinalError, IndexError):
    """Raised when a class index is outside [0, K)."""

    def __init__(self, index: int, num_classes: int):
        super().__init__(f"class index {index} out of range for {num_classes} classes",
                         ErrorCategory.VALIDATION, ErrorSeverity.LOW,
                         {'index': index, 'num_classes': num_classes})
        self.index = index
        self.num_classes = num_classes


class NumericError(OrdinalError, ArithmeticError):
    """Raised when a computation produces non-finite values."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message, ErrorCategory.NUMERIC, ErrorSeverity.HIGH,
                         {'step': step} if step is not None else None)
        self.step = step


class AggregationError(OrdinalError):
    """Raised when reports cannot be aggregated into a summary table."""

    def __init__(self, message: str, missing_cells: Optional[List[str]] = None):
        super().__init__(message, ErrorCategory.AGGREGATION, ErrorSeverity.MEDIUM,
                         {'missing_cells': missing_cells or []})
        self.missing_cells = missing_cells or []


class ReportIOError(OrdinalError, OSError):
    """Raised when an artifact cannot be written or read."""

    def __init__(self, message: str, path: Optional[str] = None,
                 original_error: Optional[Exception] = None):
        """
        Initialize I/O error.

        Args:
            message: Error message
            path: File or directory involved
            original_error: Original exception that caused this error
        """
        OrdinalError.__init__(self, message, ErrorCategory.IO, ErrorSeverity.HIGH,
                              {'path': path} if path else None)
        self.path = path
        self.original_error = original_error

    def __str__(self) -> str:
        return self.message
