from pydantic import BaseModel, Field
from typing import Any, Dict, List, Optional


class BaseResponse(BaseModel):
    success: bool = True
    message: Optional[str] = None


class ErrorResponse(BaseResponse):
    """Error document printed on stderr when a command fails"""
    success: bool = False
    error_code: Optional[str] = Field(None, description="Stable code of the AnalysisError subclass")
    details: Optional[Dict[str, Any]] = Field(None, description="Offending values, e.g. row and column of a bad cell")


class ValidationErrorDetail(BaseModel):
    """One rejected option"""
    field: str = Field(..., description="Dotted path of the option, e.g. 'delta' or 'cells.0.n'")
    message: str = Field(..., description="Why the value was rejected")
    code: str = Field(..., description="pydantic error type")


class ValidationErrorResponse(ErrorResponse):
    """Options rejected by RunConfig or an experiment schema"""
    error_code: str = "VALIDATION_ERROR"
    validation_errors: List[ValidationErrorDetail] = Field(default_factory=list)
