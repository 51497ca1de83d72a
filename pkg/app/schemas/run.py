from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Optional
from enum import Enum

from app.schemas.excess import Side
from app.schemas.testing import LrvMode, LrvTuning, TestConfig


class Command(str, Enum):
    TEST = "test"
    ESTIMATE = "estimate"
    SIMULATE = "simulate"
    POWER = "power"
    LRV = "lrv"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class RunConfig(BaseModel):
    """Validated options of one CLI invocation"""
    model_config = ConfigDict(frozen=True)

    command: Command
    input_path: Optional[str] = Field(None, description="CSV file with observations")
    preset: Optional[str] = Field(None, description="Named experiment preset")
    config_path: Optional[str] = Field(None, description="YAML experiment description")
    level_c: Optional[float] = Field(None, gt=0)
    delta: Optional[float] = Field(None, gt=0, lt=1)
    alpha: float = Field(0.05, gt=0, le=0.5)
    side: Side = Side.PLUS
    bandwidth: Optional[float] = Field(None, gt=0, lt=1, description="Fixed b_n, GCV when unset")
    h_d: Optional[float] = Field(None, gt=0)
    grid_size: Optional[int] = Field(None, ge=1)
    lrv_m: Optional[int] = Field(None, ge=2)
    lrv_tau: Optional[float] = Field(None, gt=0, lt=0.5)
    lrv_auto: bool = False
    multivariate: bool = False
    mc_draws: Optional[int] = Field(None, ge=1000)
    seed: Optional[int] = Field(None, ge=0)
    reps: Optional[int] = Field(None, ge=1)
    output_path: Optional[str] = None
    output_format: OutputFormat = OutputFormat.JSON

    @model_validator(mode="after")
    def validate_command(self):
        if self.command in (Command.TEST, Command.ESTIMATE, Command.LRV) and not self.input_path:
            raise ValueError(f"'{self.command.value}' needs --input")
        if self.command == Command.TEST and (self.level_c is None or self.delta is None):
            raise ValueError("'test' needs --c and --delta")
        if self.command == Command.ESTIMATE and self.level_c is None:
            raise ValueError("'estimate' needs --c")
        if self.command in (Command.SIMULATE, Command.POWER):
            if self.seed is None:
                raise ValueError(f"'{self.command.value}' needs --seed")
            if not (self.preset or self.config_path):
                raise ValueError(f"'{self.command.value}' needs --preset or --config")
        if (self.lrv_m is None) != (self.lrv_tau is None):
            raise ValueError("--lrv-m and --lrv-tau must be given together")
        if self.lrv_auto and self.lrv_m is not None:
            raise ValueError("--lrv-auto cannot be combined with fixed --lrv-m/--lrv-tau")
        return self

    def lrv_tuning(self) -> LrvTuning:
        if self.lrv_auto:
            return LrvTuning(mode=LrvMode.AUTO)
        if self.lrv_m is not None:
            return LrvTuning(mode=LrvMode.FIXED, m=self.lrv_m, tau=self.lrv_tau)
        return LrvTuning()

    def test_config(self) -> TestConfig:
        return TestConfig(
            level_c=self.level_c,
            delta=self.delta,
            alpha=self.alpha,
            side=self.side,
            grid_size=self.grid_size,
            h_d=self.h_d,
            b_n=self.bandwidth,
            lrv=self.lrv_tuning(),
        )
