from pydantic import BaseModel, ConfigDict, Field
from typing import List, Optional


class RegularRoot(BaseModel):
    """Root t of mu(t) - mu(0) = +-c with nonvanishing slope"""
    model_config = ConfigDict(frozen=True)

    t: float = Field(..., ge=0, le=1)
    first_derivative: float = Field(..., description="mu'(t)")
    second_derivative: float = Field(0.0, description="mu''(t)")


class CriticalRoot(BaseModel):
    """Root of critical order v: the first v derivatives of mu vanish at t"""
    model_config = ConfigDict(frozen=True)

    t: float = Field(..., ge=0, le=1)
    order: int = Field(0, ge=0, description="Critical order v")
    derivative: float = Field(..., description="mu^{(v+1)}(t), nonzero")


class RegularTheory(BaseModel):
    """Asymptotic variance and bias of the uncorrected estimator"""
    model_config = ConfigDict(frozen=True)

    tau1sq: float
    tau2sq: float
    bias: float
    tau1sq_minus: Optional[float] = None
    tau2sq_minus: Optional[float] = None
    bias_minus: Optional[float] = None
    sigma12: Optional[float] = Field(None, description="Covariance of the plus and minus estimators")

    @property
    def variance(self) -> float:
        return self.tau1sq + self.tau2sq


class SideTheory(BaseModel):
    model_config = ConfigDict(frozen=True)

    order: int
    sigma1sq: float
    sigma2sq: float
    rho1sq: Optional[float] = None
    rho2sq: Optional[float] = None

    @property
    def variance(self) -> float:
        if self.rho1sq is not None:
            return self.rho1sq + self.rho2sq
        return self.sigma1sq + self.sigma2sq


class CriticalTheory(BaseModel):
    """Limiting covariance of the Jackknife-based estimators"""
    model_config = ConfigDict(frozen=True)

    regime: str
    ratio: Optional[float] = None
    plus: Optional[SideTheory] = None
    minus: Optional[SideTheory] = None
    sigma12: Optional[float] = None
    covariance: List[List[float]]
    total_variance: float = Field(..., description="Variance of the two-sided estimator")
