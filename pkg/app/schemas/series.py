from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing import Optional
import numpy as np

MIN_OBSERVATIONS = 10


def _frozen_array(values, ndim: int) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"Expected a {ndim}-dimensional array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("All values must be finite")
    arr.setflags(write=False)
    return arr


class TimeSeries(BaseModel):
    """Observations X_1,...,X_n on the rescaled grid i/n"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray = Field(..., description="Ordered observations")
    name: Optional[str] = Field(None, description="Column name of the source data")

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v):
        arr = _frozen_array(v, ndim=1)
        if arr.size < MIN_OBSERVATIONS:
            raise ValueError(f"A time series needs at least {MIN_OBSERVATIONS} observations, got {arr.size}")
        return arr

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def design_points(self) -> np.ndarray:
        """Rescaled times i/n, i = 1..n"""
        return np.arange(1, self.n + 1) / self.n

    def shifted(self, constant: float) -> "TimeSeries":
        return TimeSeries(values=self.values + constant, name=self.name)

    def scaled(self, factor: float) -> "TimeSeries":
        return TimeSeries(values=self.values * factor, name=self.name)


class MultiSeries(BaseModel):
    """n observations of an m-dimensional series, one row per time point"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray = Field(..., description="n x m matrix of observations")
    names: Optional[list] = Field(None, description="Column names")

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v):
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        arr = _frozen_array(arr, ndim=2)
        if arr.shape[0] < MIN_OBSERVATIONS:
            raise ValueError(f"A time series needs at least {MIN_OBSERVATIONS} observations, got {arr.shape[0]}")
        if arr.shape[1] < 1:
            raise ValueError("A multivariate series needs at least one column")
        return arr

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def m(self) -> int:
        return int(self.values.shape[1])

    def component(self, index: int) -> TimeSeries:
        """Univariate series of one coordinate"""
        name = self.names[index] if self.names else None
        return TimeSeries(values=self.values[:, index], name=name)
