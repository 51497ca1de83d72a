from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Any, Dict, List, Literal, Optional
from enum import Enum
import math

import numpy as np

from app.schemas.excess import Side
from app.schemas.testing import LrvTuning, TestConfig
from app.utils.models import (
    COEFFICIENT_SUPREMA,
    MEAN_FUNCTIONS,
    coefficient_model_one,
    coefficient_model_two,
    constant_coefficient,
)

TRUNCATION_TOLERANCE = 1e-12


class ErrorModelName(str, Enum):
    MODEL_I = "I"
    MODEL_II = "II"
    IID = "iid"
    AR = "ar"


class BandwidthMode(str, Enum):
    GCV = "gcv"
    FIXED = "fixed"


class ErrorModel(BaseModel):
    """Locally stationary tvAR(1) errors scale * G(t, F_i)"""
    model_config = ConfigDict(frozen=True)

    name: ErrorModelName = Field(ErrorModelName.MODEL_I, description="Coefficient function")
    scale: float = Field(0.2, ge=0, description="Multiplier of the filter output")
    phi: Optional[float] = Field(None, gt=-1, lt=1, description="Constant coefficient of the 'ar' model")

    @model_validator(mode="after")
    def validate_phi(self):
        if self.name == ErrorModelName.AR and self.phi is None:
            raise ValueError("The 'ar' error model needs a coefficient phi")
        return self

    def coefficient(self, t) -> np.ndarray:
        """tvAR(1) coefficient a(t)"""
        if self.name == ErrorModelName.MODEL_I:
            return coefficient_model_one(t)
        if self.name == ErrorModelName.MODEL_II:
            return coefficient_model_two(t)
        if self.name == ErrorModelName.AR:
            return constant_coefficient(self.phi)(t)
        return constant_coefficient(0.0)(t)

    @property
    def sup_coefficient(self) -> float:
        if self.name == ErrorModelName.AR:
            return abs(self.phi)
        return COEFFICIENT_SUPREMA.get(self.name.value, 0.0)

    @property
    def truncation(self) -> int:
        """Smallest K with sup|a|^K below the truncation tolerance"""
        sup = self.sup_coefficient
        if sup == 0.0:
            return 0
        return int(math.ceil(math.log(TRUNCATION_TOLERANCE) / math.log(sup)))

    def long_run_variance(self, t) -> np.ndarray:
        """scale^2 / (1 - a(t))^2"""
        return self.scale ** 2 / (1.0 - self.coefficient(t)) ** 2

    @property
    def label(self) -> str:
        return self.name.value


class MeanModel(BaseModel):
    """Named mean function, optionally with the parabola coefficient a"""
    model_config = ConfigDict(frozen=True)

    name: str = Field("a", description="One of a, b, III, IV, parametric, flat")
    a_coef: Optional[float] = Field(None, description="Coefficient of the parametric parabola")

    @field_validator("name")
    @classmethod
    def validate_name(cls, v):
        if v not in MEAN_FUNCTIONS:
            raise ValueError(f"Unknown mean model '{v}'. Available: {', '.join(MEAN_FUNCTIONS)}")
        return v

    def __call__(self, t) -> np.ndarray:
        return MEAN_FUNCTIONS[self.name](self.a_coef)(t)

    @property
    def label(self) -> str:
        if self.a_coef is not None:
            return f"{self.name}[a={self.a_coef:g}]"
        return self.name


class ExperimentCell(BaseModel):
    """One Monte Carlo cell: data model, sample size and test parameters"""
    model_config = ConfigDict(frozen=True)

    mean: MeanModel = Field(default_factory=MeanModel)
    error: ErrorModel = Field(default_factory=ErrorModel)
    n: int = Field(500, ge=10)
    level_c: float = Field(..., gt=0)
    delta: float = Field(0.3, gt=0, lt=1)
    alpha: float = Field(0.05, gt=0, le=0.5)
    side: Side = Side.PLUS
    b_mode: BandwidthMode = BandwidthMode.GCV
    bandwidth: Optional[float] = Field(None, gt=0, lt=1, description="Fixed mean bandwidth")
    b_offset: float = Field(0.0, description="Shift added to the GCV bandwidth")
    h_d: Optional[float] = Field(None, gt=0)
    reps: int = Field(100, ge=1)
    lrv: LrvTuning = Field(default_factory=LrvTuning)

    @model_validator(mode="after")
    def validate_bandwidth(self):
        if self.b_mode == BandwidthMode.FIXED and self.bandwidth is None:
            raise ValueError("Fixed bandwidth mode needs a bandwidth")
        return self

    @property
    def b_label(self) -> str:
        if self.b_mode == BandwidthMode.FIXED:
            return f"{self.bandwidth:g}"
        if self.b_offset:
            return f"gcv{self.b_offset:+g}"
        return "gcv"

    def test_config(self, bandwidth: Optional[float] = None) -> TestConfig:
        return TestConfig(
            level_c=self.level_c,
            delta=self.delta,
            alpha=self.alpha,
            side=self.side,
            h_d=self.h_d,
            b_n=bandwidth,
            lrv=self.lrv,
        )


class McReport(BaseModel):
    """Aggregated result of one Monte Carlo cell"""
    model_config = ConfigDict(frozen=True)

    model: str
    n: int
    c: float
    delta: float
    alpha: float
    b_mode: str
    reps: int = Field(..., ge=1)
    rejection_rate: float = Field(..., ge=0, le=1)
    bias: float
    sd: float = Field(..., ge=0)
    seed: int
    bias_uncorrected: float
    sd_uncorrected: float = Field(..., ge=0)
    target: float = Field(..., description="Deterministic excess at high resolution")
    seeds: List[int] = Field(default_factory=list, description="Per-replication seeds")

    def to_row(self) -> Dict[str, Any]:
        return {
            "model": self.model,
            "n": self.n,
            "c": self.c,
            "delta": self.delta,
            "alpha": self.alpha,
            "b_mode": self.b_mode,
            "reps": self.reps,
            "rejection_rate": self.rejection_rate,
            "bias": self.bias,
            "sd": self.sd,
            "seed": self.seed,
            "bias_uncorrected": self.bias_uncorrected,
            "sd_uncorrected": self.sd_uncorrected,
        }


class ExperimentSpec(BaseModel):
    """A table of Monte Carlo cells"""
    name: str = "custom"
    cells: List[ExperimentCell] = Field(..., min_length=1)

    def with_reps(self, reps: Optional[int]) -> "ExperimentSpec":
        if reps is None:
            return self
        return ExperimentSpec(
            name=self.name,
            cells=[ExperimentCell(**{**cell.model_dump(), "reps": reps}) for cell in self.cells],
        )


class PowerSpec(BaseModel):
    """Sweep of one parameter of a base cell"""
    name: str = "custom"
    base: ExperimentCell
    parameter: Literal["a", "delta", "c"]
    values: List[float] = Field(..., min_length=1)

    def cells(self) -> List[ExperimentCell]:
        cells = []
        for value in self.values:
            if self.parameter == "a":
                mean = MeanModel(name="parametric", a_coef=value)
                cells.append(ExperimentCell(**{**self.base.model_dump(), "mean": mean}))
            elif self.parameter == "delta":
                cells.append(ExperimentCell(**{**self.base.model_dump(), "delta": value}))
            else:
                cells.append(ExperimentCell(**{**self.base.model_dump(), "level_c": value}))
        return cells

    def with_reps(self, reps: Optional[int]) -> "PowerSpec":
        if reps is None:
            return self
        return PowerSpec(
            name=self.name,
            base=ExperimentCell(**{**self.base.model_dump(), "reps": reps}),
            parameter=self.parameter,
            values=self.values,
        )


class PowerPoint(BaseModel):
    parameter: str
    value: float
    report: McReport

    def to_row(self) -> Dict[str, Any]:
        return {"parameter": self.parameter, "value": self.value, **self.report.to_row()}
