"""
Error Taxonomy and Handling

Exception types raised across the toolkit and the handler that turns them into
machine-readable records and process exit codes for the CLI.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

import structlog

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class ZeroShotError(Exception):
    """Base class for every error the toolkit raises on purpose."""

    error_type = "zeroshot_error"
    exit_code = EXIT_INTERNAL

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = context


# --- configuration family (exit 2) ---

class ConfigError(ZeroShotError):
    error_type = "config_error"
    exit_code = EXIT_CONFIG


class ParameterError(ConfigError):
    error_type = "parameter_error"


# --- data family (exit 3) ---

class DataError(ZeroShotError):
    error_type = "data_error"
    exit_code = EXIT_DATA


class FormatError(DataError):
    error_type = "format_error"


class ParseError(FormatError):
    error_type = "parse_error"

    def __init__(self, message: str, line_number: Optional[int] = None, **context: Any) -> None:
        super().__init__(message, line_number=line_number, **context)
        self.line_number = line_number


class VocabularyLookupError(DataError):
    error_type = "lookup_error"

    def __init__(self, message: str, missing: Optional[list] = None, **context: Any) -> None:
        super().__init__(message, missing=list(missing or []), **context)
        self.missing = list(missing or [])


class DegenerateEmbeddingError(DataError):
    error_type = "degenerate_embedding"


class RetentionError(DataError):
    error_type = "retention_error"


# --- numerical family (exit 4) ---

class NumericalError(ZeroShotError):
    error_type = "numerical_error"
    exit_code = EXIT_NUMERICAL


class SolverError(NumericalError):
    error_type = "solver_error"

    def __init__(self, message: str, condition: Optional[float] = None, **context: Any) -> None:
        super().__init__(message, condition=condition, **context)
        self.condition = condition


class MetricError(NumericalError):
    error_type = "metric_error"


class SplitFailure(ZeroShotError):
    """Raised by the experiment runner when one split fails; keeps the cause's exit code."""

    error_type = "split_failure"

    def __init__(self, split_id: int, cause: BaseException) -> None:
        super().__init__(f"split {split_id} failed: {cause}", split_id=split_id)
        self.split_id = split_id
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", EXIT_INTERNAL)


@dataclass
class ErrorRecord:
    """Machine-readable description of a handled error."""
    error_type: str
    message: str
    exit_code: int
    context: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error_type": self.error_type,
            "message": self.message,
            "exit_code": self.exit_code,
            "context": self.context,
        }


class ErrorHandler:
    """Maps exceptions to error records and exit codes."""

    def __init__(self):
        self.error_counts: Dict[str, int] = {}
        self.record_builders: Dict[type, Callable[[BaseException], ErrorRecord]] = {}

        self._register_record_builders()

    def _register_record_builders(self):
        """Register record builders per error family; most specific class wins."""
        self.record_builders = {
            SplitFailure: self._handle_split_failure,
            ConfigError: self._handle_known,
            DataError: self._handle_known,
            NumericalError: self._handle_known,
            ZeroShotError: self._handle_known,
            FileNotFoundError: self._handle_missing_file,
            OSError: self._handle_io_error,
        }

    def handle_error(self, error: BaseException) -> ErrorRecord:
        """Build the record for an error and update counts."""
        builder = self._find_builder(error)
        record = builder(error)
        self.error_counts[record.error_type] = self.error_counts.get(record.error_type, 0) + 1
        logger.error(
            "error_handled",
            error_type=record.error_type,
            exit_code=record.exit_code,
            message=record.message,
        )
        return record

    def _find_builder(self, error: BaseException) -> Callable[[BaseException], ErrorRecord]:
        for klass in type(error).__mro__:
            if klass in self.record_builders:
                return self.record_builders[klass]
        return self._handle_unknown_error

    def _handle_known(self, error: BaseException) -> ErrorRecord:
        assert isinstance(error, ZeroShotError)
        return ErrorRecord(
            error_type=error.error_type,
            message=error.message,
            exit_code=error.exit_code,
            context=_jsonable(error.context),
        )

    def _handle_split_failure(self, error: BaseException) -> ErrorRecord:
        assert isinstance(error, SplitFailure)
        cause_record = self._find_builder(error.cause)(error.cause)
        context = dict(cause_record.context)
        context["split_id"] = error.split_id
        context["cause_type"] = cause_record.error_type
        return ErrorRecord(
            error_type=error.error_type,
            message=error.message,
            exit_code=cause_record.exit_code,
            context=context,
        )

    def _handle_missing_file(self, error: BaseException) -> ErrorRecord:
        return ErrorRecord(
            error_type="missing_file",
            message=str(error),
            exit_code=EXIT_DATA,
            context={"path": getattr(error, "filename", None)},
        )

    def _handle_io_error(self, error: BaseException) -> ErrorRecord:
        return ErrorRecord(
            error_type="io_error",
            message=str(error),
            exit_code=EXIT_DATA,
            context={"path": getattr(error, "filename", None)},
        )

    def _handle_unknown_error(self, error: BaseException) -> ErrorRecord:
        return ErrorRecord(
            error_type="internal_error",
            message=f"{type(error).__name__}: {error}",
            exit_code=EXIT_INTERNAL,
        )

    def get_error_summary(self) -> Dict[str, Any]:
        """Get a summary of handled errors."""
        return {
            "total_errors": sum(self.error_counts.values()),
            "error_types": sorted(self.error_counts),
        }


def _jsonable(context: Dict[str, Any]) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for key, value in context.items():
        if value is None or isinstance(value, (bool, int, float, str)):
            out[key] = value
        elif isinstance(value, (list, tuple)):
            out[key] = [v if isinstance(v, (bool, int, float, str)) else str(v) for v in value]
        else:
            out[key] = str(value)
    return out
