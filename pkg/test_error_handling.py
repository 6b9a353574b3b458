"""
Test suite for the exception hierarchy and the CLI error handler.
"""

import io
import logging

import pytest

from src.error_handler import (EXIT_FAILURE, EXIT_IO, EXIT_NUMERIC, EXIT_USAGE, ErrorHandler,
                               get_error_handler, handle_error)
from src.exceptions import (AggregationError, ClassIndexError, ConfigurationError, DimensionError,
                            ErrorCategory, ErrorSeverity, NumericError, ReportIOError,
                            ValidationError)


class TestExceptions:
    """Test cases for the custom exceptions."""

    def test_validation_error(self):
        error = ValidationError("bad ranks", "ranks")
        assert error.field == "ranks"
        assert error.category == ErrorCategory.VALIDATION
        assert error.details == {'field': "ranks"}
        assert isinstance(error, ValueError)

    def test_configuration_error(self):
        error = ConfigurationError("missing s", "s")
        assert error.config_key == "s"
        assert error.category == ErrorCategory.CONFIGURATION

    def test_class_index_error(self):
        error = ClassIndexError(5, 4)
        assert isinstance(error, IndexError)
        assert "5" in str(error) and "4 classes" in str(error)

    def test_numeric_error_step(self):
        error = NumericError("loss is nan", step=120)
        assert error.step == 120
        assert error.severity == ErrorSeverity.HIGH

    def test_report_io_error(self):
        original = PermissionError("denied")
        error = ReportIOError("cannot write", "/out/x.json", original)
        assert str(error) == "cannot write"
        assert error.original_error is original
        assert isinstance(error, OSError)


class TestErrorHandler:
    """Test cases for ErrorHandler."""

    def setup_method(self):
        self.stream = io.StringIO()
        self.handler = ErrorHandler(self.stream)

    @pytest.mark.parametrize("error,category,severity", [
        (ConfigurationError("x", "s"), ErrorCategory.CONFIGURATION, ErrorSeverity.MEDIUM),
        (DimensionError("x"), ErrorCategory.VALIDATION, ErrorSeverity.LOW),
        (NumericError("x"), ErrorCategory.NUMERIC, ErrorSeverity.HIGH),
        (MemoryError(), ErrorCategory.SYSTEM, ErrorSeverity.CRITICAL),
        (ZeroDivisionError(), ErrorCategory.NUMERIC, ErrorSeverity.HIGH),
        (FileNotFoundError("x"), ErrorCategory.IO, ErrorSeverity.HIGH),
        (ValueError("x"), ErrorCategory.VALIDATION, ErrorSeverity.LOW),
        (RuntimeError("x"), ErrorCategory.UNKNOWN, ErrorSeverity.MEDIUM),
    ])
    def test_categorize(self, error, category, severity):
        assert self.handler.categorize(error) == (category, severity)

    @pytest.mark.parametrize("error,code", [
        (ConfigurationError("x", "s"), EXIT_USAGE),
        (ValidationError("x"), EXIT_USAGE),
        (ReportIOError("x", "/p"), EXIT_IO),
        (NumericError("x"), EXIT_NUMERIC),
        (AggregationError("x"), EXIT_NUMERIC),
        (RuntimeError("x"), EXIT_FAILURE),
    ])
    def test_exit_codes(self, error, code):
        assert self.handler.exit_code_for(error) == code

    def test_diagnostic_names_category_and_key(self):
        code = self.handler.handle_error(
            ConfigurationError("scheme 'sord_circular' requires the hyperparameter 's'", "s"))
        assert code == EXIT_USAGE
        assert self.stream.getvalue() == (
            "error: [configuration] scheme 'sord_circular' requires the hyperparameter 's'\n")

    def test_diagnostic_appends_path(self):
        line = self.handler.format_diagnostic(ReportIOError("output directory is not writable", "/ro"))
        assert line == "error: [io] output directory is not writable (/ro)"

    def test_diagnostic_lists_missing_cells(self):
        error = AggregationError("summary grid is incomplete", ["onehot n=200 seed=1"])
        line = self.handler.format_diagnostic(error)
        assert line.endswith("missing: onehot n=200 seed=1")
        assert line.startswith("error: [aggregation] ")

    def test_severity_controls_log_level(self, caplog):
        with caplog.at_level(logging.DEBUG, logger="src.error_handler"):
            self.handler.handle_error(NumericError("loss is nan", step=30), {'command': "train"})
        record = caplog.records[0]
        assert record.levelno == logging.ERROR
        assert "command=train" in record.getMessage()
        assert "step=30" in record.getMessage()

    def test_error_stats(self):
        self.handler.handle_error(ValidationError("a"))
        self.handler.handle_error(ValidationError("b"))
        self.handler.handle_error(NumericError("c"))
        stats = self.handler.get_error_stats()
        assert stats['total_errors'] == 3
        assert stats['errors_by_category'] == {'validation': 2, 'numeric': 1}
        assert stats['errors_by_severity'] == {'low': 2, 'high': 1}
        assert stats['last_error_time'] is not None

        self.handler.clear_error_stats()
        assert self.handler.get_error_stats()['total_errors'] == 0


class TestGlobalHandler:
    """Test cases for the module-level helpers."""

    def test_singleton(self):
        assert get_error_handler() is get_error_handler()

    def test_handle_error_returns_exit_code(self, capsys):
        assert handle_error(ConfigurationError("unknown key 'sigma'", "sigma")) == EXIT_USAGE
        assert "error: [configuration] unknown key 'sigma'" in capsys.readouterr().err
