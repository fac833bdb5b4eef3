"""
Comprehensive Error Handling System
Provides consistent error types and failure recording across the simulation,
dataset, training and reporting pipeline.
"""

from typing import Dict, Any, Optional, List, Sequence
from dataclasses import dataclass, field
from datetime import datetime
import traceback
import logging
from enum import Enum

class ErrorSeverity(Enum):
    """Error severity levels."""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"

class ErrorCategory(Enum):
    """Error categories for better organization."""
    CONFIGURATION = "configuration"
    VALIDATION = "validation"
    DOMAIN = "domain"
    PARSING = "parsing"
    SCHEMA = "schema"
    ENCODING = "encoding"
    MODEL = "model"
    CONVERGENCE = "convergence"
    FILE_SYSTEM = "file_system"
    USER_INPUT = "user_input"
    SYSTEM = "system"

@dataclass
class ErrorDetails:
    """Structured error information."""
    error_id: str
    category: ErrorCategory
    severity: ErrorSeverity
    message: str
    technical_message: Optional[str] = None
    suggestions: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)
    timestamp: datetime = field(default_factory=datetime.now)
    traceback_info: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert error details to dictionary."""
        return {
            "error_id": self.error_id,
            "category": self.category.value,
            "severity": self.severity.value,
            "message": self.message,
            "technical_message": self.technical_message,
            "suggestions": self.suggestions,
            "metadata": self.metadata,
            "timestamp": self.timestamp.isoformat(),
            "traceback": self.traceback_info
        }

class PathLossLabException(Exception):
    """Base exception for all path-loss toolkit errors."""

    def __init__(
        self,
        message: str,
        category: ErrorCategory = ErrorCategory.SYSTEM,
        severity: ErrorSeverity = ErrorSeverity.MEDIUM,
        suggestions: List[str] = None,
        metadata: Dict[str, Any] = None
    ):
        super().__init__(message)
        self.message = message
        self.category = category
        self.severity = severity
        self.suggestions = suggestions or []
        self.metadata = metadata or {}

def _with_line(message: str, line: Optional[int]) -> str:
    return f"{message} (line {line})" if line is not None else message

class ConfigurationError(PathLossLabException):
    """Raised when a configuration file or setting is invalid."""

    def __init__(self, config_key: str, issue: str, line: Optional[int] = None, **kwargs):
        message = _with_line(f"Configuration error for '{config_key}': {issue}", line)

        super().__init__(
            message,
            category=ErrorCategory.CONFIGURATION,
            severity=ErrorSeverity.HIGH,
            suggestions=[
                "Check your scenario file",
                "Verify environment variables",
                "Compare against the bundled config/scenario.yaml"
            ],
            metadata={"config_key": config_key, "issue": issue, "line": line},
            **kwargs
        )
        self.config_key = config_key
        self.issue = issue
        self.line = line

class ValidationError(PathLossLabException):
    """Raised when a value violates a range or bound."""

    def __init__(self, field: str, value: Any, expected: str = None, line: Optional[int] = None, **kwargs):
        message = f"Invalid value for {field}: {value}"
        if expected:
            message += f" (expected: {expected})"
        message = _with_line(message, line)

        super().__init__(
            message,
            category=ErrorCategory.VALIDATION,
            severity=ErrorSeverity.LOW,
            suggestions=[
                f"Check the value of {field}",
                f"Ensure {field} meets the required constraints"
            ],
            metadata={"field": field, "value": str(value), "expected": expected, "line": line},
            **kwargs
        )
        self.field = field
        self.expected = expected

class DomainError(PathLossLabException):
    """Raised when an input lies outside a model's mathematical domain."""

    def __init__(self, quantity: str, value: Any, constraint: str, **kwargs):
        message = f"{quantity} = {value} is outside the model domain ({constraint})"

        super().__init__(
            message,
            category=ErrorCategory.DOMAIN,
            severity=ErrorSeverity.MEDIUM,
            suggestions=[f"Provide {quantity} satisfying {constraint}"],
            metadata={"quantity": quantity, "value": value, "constraint": constraint},
            **kwargs
        )
        self.quantity = quantity

class UnsupportedFrequencyError(PathLossLabException):
    """Raised when no attenuation coefficients exist for a carrier frequency."""

    def __init__(self, freq_ghz: float, available: Sequence[float], **kwargs):
        listed = ", ".join(f"{f:g}" for f in available)
        message = f"No attenuation coefficients for {freq_ghz:g} GHz (tabulated: {listed})"

        super().__init__(
            message,
            category=ErrorCategory.DOMAIN,
            severity=ErrorSeverity.MEDIUM,
            suggestions=[
                "Use one of the tabulated frequencies",
                "Enable attenuation.interpolate in the scenario file",
                "Regenerate the table with the 'coefficients' command"
            ],
            metadata={"freq_ghz": freq_ghz, "available": list(available)},
            **kwargs
        )

class CsvParseError(PathLossLabException):
    """Raised when a CSV file cannot be parsed into a dataset."""

    def __init__(self, path: str, reason: str, rows: Sequence[int] = (), **kwargs):
        message = f"Failed to parse {path}: {reason}"
        if rows:
            shown = ", ".join(str(r) for r in list(rows)[:10])
            message += f" (rows {shown}{'...' if len(rows) > 10 else ''})"

        super().__init__(
            message,
            category=ErrorCategory.PARSING,
            severity=ErrorSeverity.MEDIUM,
            suggestions=[
                "Ensure the file is UTF-8, comma-separated and has a header row",
                "Check the listed rows for missing or extra cells"
            ],
            metadata={"path": path, "reason": reason, "rows": list(rows)},
            **kwargs
        )
        self.rows = list(rows)

class SchemaError(PathLossLabException):
    """Raised when dataset columns differ from the expected schema."""

    def __init__(self, missing: Sequence[str] = (), unexpected: Sequence[str] = (), misordered: bool = False, **kwargs):
        parts = []
        if missing:
            parts.append("missing columns: " + ", ".join(repr(c) for c in missing))
        if unexpected:
            parts.append("unexpected columns: " + ", ".join(repr(c) for c in unexpected))
        if misordered:
            parts.append("columns are out of order")
        message = "Schema mismatch: " + "; ".join(parts)

        super().__init__(
            message,
            category=ErrorCategory.SCHEMA,
            severity=ErrorSeverity.MEDIUM,
            suggestions=["Compare the header against the channel dataset schema"],
            metadata={"missing": list(missing), "unexpected": list(unexpected), "misordered": misordered},
            **kwargs
        )
        self.missing = list(missing)
        self.unexpected = list(unexpected)

class EncodingError(PathLossLabException):
    """Raised when a categorical label has no code."""

    def __init__(self, label: Any, known: Sequence[str], **kwargs):
        message = f"Unknown season label {label!r} (known: {', '.join(known)})"

        super().__init__(
            message,
            category=ErrorCategory.ENCODING,
            severity=ErrorSeverity.LOW,
            suggestions=["Season labels are case-sensitive: " + ", ".join(known)],
            metadata={"label": str(label), "known": list(known)},
            **kwargs
        )

class ShapeError(PathLossLabException):
    """Raised when a feature matrix has the wrong width."""

    def __init__(self, expected: int, actual: int, **kwargs):
        message = f"Feature width mismatch: model was trained on {expected} columns, got {actual}"

        super().__init__(
            message,
            category=ErrorCategory.MODEL,
            severity=ErrorSeverity.MEDIUM,
            metadata={"expected": expected, "actual": actual},
            **kwargs
        )

class SingularFitError(PathLossLabException):
    """Raised when unregularized normal equations are rank deficient."""

    def __init__(self, kind: str, rank: int, n_parameters: int, **kwargs):
        message = (f"{kind} fit is singular: design rank {rank} < {n_parameters} parameters")

        super().__init__(
            message,
            category=ErrorCategory.MODEL,
            severity=ErrorSeverity.HIGH,
            suggestions=[
                "Use Ridge regression (λ > 0) for collinear features",
                "Drop constant or duplicated feature columns",
                "Provide more training rows than parameters"
            ],
            metadata={"kind": kind, "rank": rank, "n_parameters": n_parameters},
            **kwargs
        )

class ConvergenceError(PathLossLabException):
    """Raised when an iterative solver stops at its iteration cap."""

    def __init__(self, kind: str, iterations: int, diagnostics: Dict[str, Any] = None, **kwargs):
        message = f"{kind} did not converge within {iterations} iterations"

        super().__init__(
            message,
            category=ErrorCategory.CONVERGENCE,
            severity=ErrorSeverity.HIGH,
            suggestions=[
                "Raise the iteration cap or loosen the tolerance",
                "Standardize the features"
            ],
            metadata={"kind": kind, "iterations": iterations, "diagnostics": diagnostics or {}},
            **kwargs
        )
        self.diagnostics = diagnostics or {}

class UndefinedMetricError(PathLossLabException):
    """Raised when R² is undefined; the remaining metrics travel with it."""

    def __init__(self, metric: str, reason: str, partial_report: Any = None, **kwargs):
        message = f"{metric} is undefined: {reason}"

        super().__init__(
            message,
            category=ErrorCategory.VALIDATION,
            severity=ErrorSeverity.LOW,
            metadata={"metric": metric, "reason": reason},
            **kwargs
        )
        self.partial_report = partial_report

class ModelFormatError(PathLossLabException):
    """Raised when a persisted model cannot be loaded by this version."""

    def __init__(self, path: str, reason: str, **kwargs):
        message = f"Cannot load model {path}: {reason}"

        super().__init__(
            message,
            category=ErrorCategory.MODEL,
            severity=ErrorSeverity.MEDIUM,
            suggestions=["Retrain the model with the installed version"],
            metadata={"path": path, "reason": reason},
            **kwargs
        )

class FileSystemError(PathLossLabException):
    """Raised when file system operations fail."""

    def __init__(self, operation: str, path: str, reason: str = None, **kwargs):
        message = f"File system error during {operation}: {path}"
        if reason:
            message += f" ({reason})"

        super().__init__(
            message,
            category=ErrorCategory.FILE_SYSTEM,
            severity=ErrorSeverity.MEDIUM,
            suggestions=[
                "Check file permissions",
                "Ensure directory exists",
                "Check path validity"
            ],
            metadata={"operation": operation, "path": path, "reason": reason},
            **kwargs
        )

class UsageError(PathLossLabException):
    """Raised for invalid command-line flag combinations."""

    def __init__(self, message: str, **kwargs):
        super().__init__(
            message,
            category=ErrorCategory.USER_INPUT,
            severity=ErrorSeverity.LOW,
            suggestions=["Run with --help for the flag reference"],
            **kwargs
        )

class ErrorHandler:
    """Centralized error handler with logging and failure history."""

    def __init__(self, logger: logging.Logger = None):
        self.logger = logger or logging.getLogger(__name__)
        self._error_count = 0
        self._error_history: List[ErrorDetails] = []

    def handle_error(
        self,
        error: Exception,
        context: Dict[str, Any] = None
    ) -> ErrorDetails:
        """
        Handle an error and return structured error details.

        Args:
            error: The exception that occurred
            context: Additional context about the error

        Returns:
            ErrorDetails object with structured error information
        """
        self._error_count += 1
        error_id = f"ERR-{datetime.now().strftime('%Y%m%d')}-{self._error_count:04d}"

        if isinstance(error, PathLossLabException):
            error_details = ErrorDetails(
                error_id=error_id,
                category=error.category,
                severity=error.severity,
                message=error.message,
                technical_message=str(error),
                suggestions=error.suggestions,
                metadata=dict(error.metadata)
            )
        else:
            error_details = ErrorDetails(
                error_id=error_id,
                category=ErrorCategory.SYSTEM,
                severity=ErrorSeverity.MEDIUM,
                message=f"{type(error).__name__}: {error}",
                technical_message=str(error)
            )

        if context:
            error_details.metadata.update(context)

        if self.logger.isEnabledFor(logging.DEBUG):
            error_details.traceback_info = traceback.format_exc()

        self._log_error(error_details, error)

        self._error_history.append(error_details)
        if len(self._error_history) > 100:
            self._error_history = self._error_history[-100:]

        return error_details

    def _log_error(self, error_details: ErrorDetails, original_error: Exception):
        """Log error with appropriate level based on severity."""
        log_message = f"[{error_details.error_id}] {error_details.message}"

        if error_details.metadata:
            log_message += f" | Metadata: {error_details.metadata}"

        if error_details.severity == ErrorSeverity.CRITICAL:
            self.logger.critical(log_message, exc_info=original_error)
        elif error_details.severity == ErrorSeverity.HIGH:
            self.logger.error(log_message)
        elif error_details.severity == ErrorSeverity.MEDIUM:
            self.logger.warning(log_message)
        else:
            self.logger.info(log_message)

    def get_error_stats(self) -> Dict[str, Any]:
        """Get error statistics."""
        if not self._error_history:
            return {"total_errors": 0}

        category_counts = {}
        for error in self._error_history:
            category_counts[error.category.value] = category_counts.get(error.category.value, 0) + 1

        return {
            "total_errors": len(self._error_history),
            "by_category": category_counts,
            "recent_errors": [error.to_dict() for error in self._error_history[-5:]]
        }

_error_handler: Optional[ErrorHandler] = None

def get_error_handler() -> ErrorHandler:
    """Get the global error handler instance."""
    global _error_handler
    if _error_handler is None:
        _error_handler = ErrorHandler()
    return _error_handler

def handle_error(error: Exception, **kwargs) -> ErrorDetails:
    """Convenience function to handle errors using the global handler."""
    return get_error_handler().handle_error(error, **kwargs)
