"""
Centralized error handling for the command-line harness.

Classifies exceptions, logs them at a level matching their severity, keeps
running statistics and renders the one-line diagnostic printed on stderr.
"""

import logging
import sys
import traceback
from datetime import datetime
from typing import Any, Dict, Optional, TextIO, Tuple

from .exceptions import (
    AggregationError, ConfigurationError, ErrorCategory, ErrorSeverity, NumericError,
    OrdinalError, ReportIOError,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

_EXIT_BY_CATEGORY = {
    ErrorCategory.VALIDATION: EXIT_USAGE,
    ErrorCategory.CONFIGURATION: EXIT_USAGE,
    ErrorCategory.IO: EXIT_IO,
    ErrorCategory.NUMERIC: EXIT_NUMERIC,
    ErrorCategory.AGGREGATION: EXIT_NUMERIC,
}


class ErrorHandler:
    """
    Error handler shared by the CLI commands.

    Library code raises; this class is the only place errors are turned into
    log records, diagnostics and exit codes.
    """

    def __init__(self, stream: Optional[TextIO] = None):
        """
        Initialize the error handler.

        Args:
            stream: Where diagnostics are written (default: sys.stderr at call time)
        """
        self.logger = logging.getLogger(__name__)
        self.stream = stream
        self.error_stats = self._empty_stats()

    @staticmethod
    def _empty_stats() -> Dict[str, Any]:
        return {
            'total_errors': 0,
            'errors_by_category': {},
            'errors_by_severity': {},
            'last_error_time': None
        }

    def categorize(self, error: BaseException) -> Tuple[ErrorCategory, ErrorSeverity]:
        """
        Categorize an error and determine its severity.

        Args:
            error: The exception to categorize

        Returns:
            tuple: (ErrorCategory, ErrorSeverity)
        """
        if isinstance(error, OrdinalError):
            return error.category, error.severity
        elif isinstance(error, MemoryError):
            return ErrorCategory.SYSTEM, ErrorSeverity.CRITICAL
        elif isinstance(error, (FloatingPointError, OverflowError, ZeroDivisionError)):
            return ErrorCategory.NUMERIC, ErrorSeverity.HIGH
        elif isinstance(error, OSError):
            return ErrorCategory.IO, ErrorSeverity.HIGH
        elif isinstance(error, (ValueError, IndexError)):
            return ErrorCategory.VALIDATION, ErrorSeverity.LOW
        else:
            return ErrorCategory.UNKNOWN, ErrorSeverity.MEDIUM

    def exit_code_for(self, error: BaseException) -> int:
        """Process exit status for an error."""
        category, _ = self.categorize(error)
        return _EXIT_BY_CATEGORY.get(category, EXIT_FAILURE)

    def format_diagnostic(self, error: BaseException) -> str:
        category, _ = self.categorize(error)
        message = error.message if isinstance(error, OrdinalError) else str(error)
        if isinstance(error, ReportIOError) and error.path and error.path not in message:
            message = f"{message} ({error.path})"
        if isinstance(error, AggregationError) and error.missing_cells:
            message = f"{message}; missing: {', '.join(error.missing_cells)}"
        return f"error: [{category.value}] {message or type(error).__name__}"

    def handle_error(self, error: BaseException,
                     context: Optional[Dict[str, Any]] = None) -> int:
        """
        Log an error, print its diagnostic and return the exit code.

        Args:
            error: The exception that occurred
            context: Additional context information (command, config path, ...)

        Returns:
            int: Exit code for the process
        """
        category, severity = self.categorize(error)
        self._update_error_stats(category, severity)

        message = f"[{category.value.upper()}] {error}"
        if context:
            message += " | Context: " + ", ".join(f"{k}={v}" for k, v in context.items())
        if isinstance(error, NumericError) and error.step is not None:
            message += f" | step={error.step}"

        if severity == ErrorSeverity.CRITICAL:
            self.logger.critical(message, exc_info=error)
        elif severity == ErrorSeverity.HIGH:
            self.logger.error(message)
            self.logger.debug("".join(traceback.format_exception(type(error), error,
                                                                 error.__traceback__)))
        elif severity == ErrorSeverity.MEDIUM:
            self.logger.warning(message)
        else:
            self.logger.info(message)

        stream = self.stream or sys.stderr
        print(self.format_diagnostic(error), file=stream)
        return self.exit_code_for(error)

    def _update_error_stats(self, category: ErrorCategory, severity: ErrorSeverity) -> None:
        self.error_stats['total_errors'] += 1
        self.error_stats['last_error_time'] = datetime.now()
        by_category = self.error_stats['errors_by_category']
        by_category[category.value] = by_category.get(category.value, 0) + 1
        by_severity = self.error_stats['errors_by_severity']
        by_severity[severity.value] = by_severity.get(severity.value, 0) + 1

    def get_error_stats(self) -> Dict[str, Any]:
        """
        Get current error statistics.

        Returns:
            Dict: Error statistics
        """
        return self.error_stats.copy()

    def clear_error_stats(self) -> None:
        """Clear error statistics."""
        self.error_stats = self._empty_stats()


# Global error handler instance
_global_error_handler: Optional[ErrorHandler] = None


def get_error_handler() -> ErrorHandler:
    """
    Get the global error handler instance.

    Returns:
        ErrorHandler: Global error handler instance
    """
    global _global_error_handler
    if _global_error_handler is None:
        _global_error_handler = ErrorHandler()
    return _global_error_handler


def handle_error(error: BaseException, context: Optional[Dict[str, Any]] = None) -> int:
    """
    Convenience function to handle errors using the global error handler.

    Returns:
        int: Exit code for the process
    """
    try:
        return get_error_handler().handle_error(error, context)
    except Exception as handler_error:
        logger = logging.getLogger(__name__)
        logger.error(f"Error handler failed: {handler_error}")
        logger.error(f"Original error: {error}")
        if isinstance(error, ConfigurationError):
            return EXIT_USAGE
        return EXIT_FAILURE
