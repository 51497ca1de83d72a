from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Any, Dict, Optional
from enum import Enum

from app.schemas.excess import ExcessConfig, Side
from app.utils.kernels import get_kernel


class LrvMode(str, Enum):
    DEFAULT = "default"
    FIXED = "fixed"
    AUTO = "auto"


class LrvTuning(BaseModel):
    """How the long-run variance tuning (m, tau) is chosen"""
    model_config = ConfigDict(frozen=True)

    mode: LrvMode = Field(LrvMode.DEFAULT, description="default rule, fixed values or minimal volatility")
    m: Optional[int] = Field(None, ge=2, description="Block length for fixed mode")
    tau: Optional[float] = Field(None, gt=0, lt=0.5, description="Smoothing bandwidth for fixed mode")

    @model_validator(mode="after")
    def validate_fixed(self):
        if self.mode == LrvMode.FIXED and (self.m is None or self.tau is None):
            raise ValueError("Fixed LRV tuning needs both m and tau")
        return self


class TestConfig(BaseModel):
    """Hypotheses and tuning of the relevant-change test"""
    model_config = ConfigDict(frozen=True)
    __test__ = False

    level_c: float = Field(..., gt=0, description="Level c")
    delta: float = Field(..., gt=0, lt=1, description="Relevant time fraction threshold")
    alpha: float = Field(0.05, gt=0, le=0.5, description="Nominal level")
    side: Side = Field(Side.PLUS, description="Which excess measure is tested")
    grid_size: Optional[int] = Field(None, ge=1, description="Riemann knots N, defaults to n")
    h_d: Optional[float] = Field(None, gt=0, description="Indicator bandwidth, defaults to N^{-1/2}/2")
    b_n: Optional[float] = Field(None, gt=0, lt=1, description="Mean bandwidth, selected by GCV when unset")
    kernel: str = Field("epanechnikov", description="Kernel name")
    lrv: LrvTuning = Field(default_factory=LrvTuning)

    @field_validator("kernel")
    @classmethod
    def validate_kernel(cls, v):
        get_kernel(v)
        return v

    def excess_config(self) -> ExcessConfig:
        return ExcessConfig(
            level_c=self.level_c,
            grid_size=self.grid_size,
            h_d=self.h_d,
            b_n=self.b_n,
            kernel=self.kernel,
        )


class TestOutcome(BaseModel):
    """Decision and diagnostics of one test run"""
    model_config = ConfigDict(frozen=True)
    __test__ = False

    statistic: float = Field(..., description="n N b_n h_d (T - Delta)")
    v_bar: float = Field(..., ge=0, description="Variance of the Gaussian approximation")
    quantile: float = Field(..., description="Critical value q_{1-alpha}")
    p_value: float = Field(..., ge=0, le=1)
    reject: bool
    t_plus: float
    t_minus: float
    degenerate_variance: bool = Field(False, description="V_bar vanished; decided by the sign of the statistic")
    bandwidth: float = Field(..., description="Mean bandwidth b_n used")
    h_d: float
    grid_size: int
    lrv_m: Optional[int] = None
    lrv_tau: Optional[float] = None
    config: TestConfig

    def to_document(self) -> Dict[str, Any]:
        """Stable JSON document"""
        return {
            "statistic": self.statistic,
            "v_bar": self.v_bar,
            "quantile": self.quantile,
            "p_value": self.p_value,
            "reject": self.reject,
            "t_plus": self.t_plus,
            "t_minus": self.t_minus,
            "degenerate_variance": self.degenerate_variance,
            "tuning": {
                "b_n": self.bandwidth,
                "h_d": self.h_d,
                "grid_size": self.grid_size,
                "lrv_m": self.lrv_m,
                "lrv_tau": self.lrv_tau,
            },
            "config": self.config.model_dump(mode="json"),
        }
