from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Optional
from enum import Enum
import math

from app.utils.kernels import KernelSpec, get_kernel


class Side(str, Enum):
    PLUS = "plus"
    MINUS = "minus"
    TWO_SIDED = "two_sided"


def default_h_d(grid_size: int) -> float:
    """Rule of thumb h_d = N^{-1/2} / 2"""
    return 0.5 / math.sqrt(grid_size)


class ExcessConfig(BaseModel):
    """Smoothing parameters of the excess-measure statistics"""
    model_config = ConfigDict(frozen=True)

    level_c: float = Field(..., gt=0, description="Level c of a relevant deviation")
    grid_size: Optional[int] = Field(None, ge=1, description="Number N of Riemann knots, defaults to n")
    h_d: Optional[float] = Field(None, gt=0, description="Bandwidth of the smoothed indicator")
    b_n: Optional[float] = Field(None, gt=0, lt=1, description="Bandwidth of the mean fit")
    kernel: str = Field("epanechnikov", description="Name of the smoothing kernel K_d")

    @model_validator(mode="after")
    def validate_bandwidths(self):
        if self.h_d is not None and self.b_n is not None and self.h_d > self.b_n:
            raise ValueError(f"h_d ({self.h_d}) must not exceed b_n ({self.b_n})")
        get_kernel(self.kernel)
        return self

    @property
    def kernel_spec(self) -> KernelSpec:
        return get_kernel(self.kernel)

    def resolve(self, n: int, b_n: Optional[float] = None) -> "ExcessConfig":
        """Fill in N = n, h_d = N^{-1/2}/2 and the fitted bandwidth where unset"""
        grid_size = self.grid_size or n
        return ExcessConfig(
            level_c=self.level_c,
            grid_size=grid_size,
            h_d=self.h_d if self.h_d is not None else default_h_d(grid_size),
            b_n=b_n if b_n else self.b_n,
            kernel=self.kernel,
        )


class ExcessEstimate(BaseModel):
    """Smoothed excess measures of a fitted mean curve"""
    model_config = ConfigDict(frozen=True)

    t_plus: float = Field(..., ge=0, le=1, description="Time fraction above mu(0) + c")
    t_minus: float = Field(..., ge=0, le=1, description="Time fraction below mu(0) - c")
    corrected: bool = Field(True, description="Whether the Jackknife fit was used")
    config: ExcessConfig

    @property
    def t_total(self) -> float:
        return self.t_plus + self.t_minus

    def for_side(self, side: Side) -> float:
        if side == Side.PLUS:
            return self.t_plus
        if side == Side.MINUS:
            return self.t_minus
        return self.t_total


class SojournEstimate(BaseModel):
    """Expected sojourn time above level c and the probability it exceeds Delta"""
    model_config = ConfigDict(frozen=True)

    e_hat: float = Field(..., ge=0, le=1)
    p_hat: float = Field(..., ge=0, le=1)
    delta: float
    config: ExcessConfig
