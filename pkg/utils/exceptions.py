"""
Custom exceptions for the W-algebra toolkit.

This module defines a hierarchy of custom exceptions to provide
better error handling and more informative error messages.
"""
import difflib
from typing import Iterable, List, Optional


class WAlgebraError(Exception):
    """Base exception for all toolkit errors"""

    def __init__(self, message: str, details: Optional[str] = None):
        """
        Initialize WAlgebraError.

        Args:
            message: User-friendly error message
            details: Technical details for debugging (optional)
        """
        self.message = message
        self.details = details
        super().__init__(self.message)

    def __str__(self):
        if self.details:
            return f"{self.message}\nDetails: {self.details}"
        return self.message


# ============================================================================
# Input/Output Errors
# ============================================================================

class FileError(WAlgebraError):
    """Base class for file-related errors"""
    pass


class FileReadError(FileError):
    """Raised when a file cannot be read"""

    def __init__(self, file_path: str, reason: Optional[str] = None):
        message = f"Cannot read file: {file_path}"
        details = reason or "Check file permissions and format."
        super().__init__(message, details)
        self.file_path = file_path


class FileWriteError(FileError):
    """Raised when a file cannot be written"""

    def __init__(self, file_path: str, reason: Optional[str] = None):
        message = f"Cannot write to file: {file_path}"
        details = reason or "Check directory permissions and disk space."
        super().__init__(message, details)
        self.file_path = file_path


# ============================================================================
# Parsing Errors
# ============================================================================

class ParsingError(WAlgebraError):
    """Base class for parsing errors"""
    pass


class ExpressionParsingError(ParsingError):
    """Raised when a serialized expression cannot be decoded"""

    def __init__(self, payload: str, reason: Optional[str] = None):
        message = f"Cannot parse expression: {payload[:80]}"
        details = reason or "Expected the JSON layout written by the json exporter."
        super().__init__(message, details)
        self.payload = payload


class StructureNameError(ParsingError):
    """Raised when a structure name cannot be resolved"""

    def __init__(self, name: str, known: Optional[List[str]] = None):
        message = f"Unknown structure: {name}"
        details = None
        if known:
            close = difflib.get_close_matches(name, known, n=3)
            if close:
                details = f"Did you mean: {', '.join(close)}?"
            else:
                details = f"Known structures: {', '.join(known)}"
        super().__init__(message, details)
        self.name = name


class IndexRangeError(ParsingError):
    """Raised when a generator index lies outside the algebra"""

    def __init__(self, key: str, universe: str):
        message = f"Generator {key} does not belong to {universe}"
        details = "Finite algebras use indices -N..-1; matrix entries run over 1..m."
        super().__init__(message, details)
        self.key = key


# ============================================================================
# Algebra Errors
# ============================================================================

class AlgebraError(WAlgebraError):
    """Base class for errors raised by the expression core"""
    pass


class MismatchedOperandsError(AlgebraError):
    """Raised when operands live in incompatible algebras"""

    def __init__(self, operation: str, reason: str):
        message = f"Incompatible operands for {operation}"
        super().__init__(message, reason)
        self.operation = operation


class NonMonicOperatorError(AlgebraError):
    """Raised when an operation needs a monic operator"""

    def __init__(self, operation: str, order: Optional[int] = None):
        message = f"{operation} requires a monic operator"
        details = f"Operator of order {order} has a non-identity leading coefficient." if order is not None else None
        super().__init__(message, details)
        self.operation = operation


class NonInvertibleOperatorError(AlgebraError):
    """Raised when the leading coefficient of an operator is not an invertible constant"""

    def __init__(self, reason: str):
        super().__init__("Operator is not invertible", reason)


class TruncationError(AlgebraError):
    """Raised when a truncated series does not reach the requested coefficient"""

    def __init__(self, requested: int, floor: Optional[int], hint: Optional[str] = None):
        message = f"Coefficient of d^{requested} is below the truncation floor {floor}"
        details = hint or "Lower the floor (--floor) so the tail reaches the requested exponent."
        super().__init__(message, details)
        self.requested = requested
        self.floor = floor


class TruncationInstabilityError(TruncationError):
    """Raised when a result changes after lowering the floor by the convergence margin"""

    def __init__(self, quantity: str, floor: int, margin: int):
        hint = f"{quantity} changed when the floor moved from {floor} to {floor - margin}; use a deeper floor."
        super().__init__(floor, floor, hint)
        self.message = f"Unstable truncation for {quantity}"
        self.quantity = quantity


# ============================================================================
# Structure Errors
# ============================================================================

class StructureError(WAlgebraError):
    """Base class for errors about lambda-bracket structures"""
    pass


class UnsupportedOperationError(StructureError):
    """Raised when a check is requested outside the supported scope"""

    def __init__(self, operation: str, reason: str):
        message = f"Unsupported operation: {operation}"
        super().__init__(message, reason)
        self.operation = operation


class DegenerateConstraintError(StructureError):
    """Raised when the constraint matrix of a Dirac reduction is not invertible"""

    def __init__(self, reason: str):
        message = "Dirac reduction impossible: constraint matrix C is degenerate"
        super().__init__(message, reason)


class OracleMismatchError(StructureError):
    """Raised when a closed-form table entry disagrees with the Adler residue route"""

    def __init__(self, entry: str, residual: str):
        message = f"Closed-form entry {entry} disagrees with the Adler map"
        super().__init__(message, f"Residual: {residual}")
        self.entry = entry


class VirasoroShapeError(StructureError):
    """Raised when {T_lambda T} is not of Virasoro shape"""

    def __init__(self, reason: str):
        super().__init__("T is not a Virasoro element", reason)


# ============================================================================
# Export Errors
# ============================================================================

class ExportError(WAlgebraError):
    """Base class for export errors"""
    pass


class ExcelExportError(ExportError):
    """Raised when Excel export fails"""

    def __init__(self, file_path: str, reason: Optional[str] = None):
        message = f"Cannot export to Excel: {file_path}"
        details = reason or "Check that the file is not open in another program and you have write permissions."
        super().__init__(message, details)
        self.file_path = file_path


class PDFExportError(ExportError):
    """Raised when PDF export fails"""

    def __init__(self, file_path: str, reason: Optional[str] = None):
        message = f"Cannot export to PDF: {file_path}"
        details = reason or "Check font availability and write permissions."
        super().__init__(message, details)
        self.file_path = file_path


# ============================================================================
# Configuration Errors
# ============================================================================

class ConfigurationError(WAlgebraError):
    """Base class for configuration errors"""
    pass


class InvalidConfigurationError(ConfigurationError):
    """Raised when configuration is invalid"""

    def __init__(self, config_key: str, reason: str):
        message = f"Invalid configuration: {config_key}"
        super().__init__(message, reason)
        self.config_key = config_key


# ============================================================================
# Utility functions for error handling
# ============================================================================

def handle_unknown_structure(name: str, known: Iterable[str]) -> StructureNameError:
    """
    Create a StructureNameError with close-match suggestions.

    Args:
        name: Name that failed to resolve
        known: Names the factory understands

    Returns:
        StructureNameError instance
    """
    return StructureNameError(name, sorted(known))


def handle_parsing_error(payload: str, original_error: Exception) -> ExpressionParsingError:
    """
    Wrap a low-level decoding failure.

    Args:
        payload: Text that failed to decode
        original_error: Original exception

    Returns:
        ExpressionParsingError instance
    """
    return ExpressionParsingError(
        payload,
        reason=f"{type(original_error).__name__}: {str(original_error)}"
    )
