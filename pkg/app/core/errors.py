from typing import Any, Dict, Optional


class AnalysisError(Exception):
    """Base class for domain errors with a stable error code"""

    error_code = "ANALYSIS_ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class DegenerateWindow(AnalysisError):
    """Weighted design matrix of the local linear fit is singular"""
    error_code = "DEGENERATE_WINDOW"


class AllCandidatesDegenerate(AnalysisError):
    """Every GCV candidate bandwidth produced a degenerate window"""
    error_code = "ALL_CANDIDATES_DEGENERATE"


class InvalidWindow(AnalysisError):
    error_code = "INVALID_WINDOW"


class ZeroBaseline(AnalysisError):
    error_code = "ZERO_BASELINE"


class InvalidTuning(AnalysisError):
    error_code = "INVALID_TUNING"


class GridTooSmall(AnalysisError):
    error_code = "GRID_TOO_SMALL"


class EmptyInput(AnalysisError):
    error_code = "EMPTY_INPUT"


class ParseError(AnalysisError):
    """Input file cell could not be read as a finite number"""

    error_code = "PARSE_ERROR"

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message, details={"row": row, "column": column})
        self.row = row
        self.column = column


class ConfigurationError(AnalysisError):
    error_code = "CONFIGURATION_ERROR"


class ZeroDerivative(AnalysisError):
    """A regular root has vanishing first derivative"""
    error_code = "ZERO_DERIVATIVE"
