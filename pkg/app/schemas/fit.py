from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import Callable, Optional
import numpy as np
from scipy import linalg

from app.utils.kernels import KernelSpec, epanechnikov


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


def excess_grid(grid_size: int) -> np.ndarray:
    """Anchor 0 followed by the Riemann knots i/N, i = 1..N"""
    if grid_size < 1:
        raise ValueError("Grid size must be positive")
    return np.arange(0, grid_size + 1) / grid_size


class MeanFit(BaseModel):
    """Bias-corrected local linear mean estimate evaluated on a query grid"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    query_grid: np.ndarray = Field(..., description="Query points in [0, 1]")
    mu_tilde: np.ndarray = Field(..., description="Jackknife estimate 2 mu_{b/sqrt2} - mu_b")
    mu_hat: np.ndarray = Field(..., description="Plain local linear estimate at bandwidth b")
    bandwidth: float = Field(..., ge=0, description="Bandwidth b_n of the fit")
    n_obs: int = Field(..., ge=1, description="Number of observations behind the fit")
    kernel: KernelSpec = Field(default_factory=epanechnikov, description="Smoothing kernel")

    @field_validator("query_grid", "mu_tilde", "mu_hat", mode="before")
    @classmethod
    def validate_arrays(cls, v):
        arr = _readonly(v)
        if arr.ndim != 1:
            raise ValueError("Fit arrays must be one-dimensional")
        return arr

    @model_validator(mode="after")
    def validate_shapes(self):
        if not (self.query_grid.size == self.mu_tilde.size == self.mu_hat.size):
            raise ValueError("query_grid, mu_tilde and mu_hat must have the same length")
        if self.query_grid.size and (self.query_grid.min() < 0 or self.query_grid.max() > 1):
            raise ValueError("Query points must lie in [0, 1]")
        return self

    @classmethod
    def from_function(
            cls,
            mu: Callable[[np.ndarray], np.ndarray],
            query_grid: np.ndarray,
            bandwidth: float = 0.0,
            n_obs: Optional[int] = None,
            kernel: Optional[KernelSpec] = None,
    ) -> "MeanFit":
        """Exact plug-in fit: the true mean evaluated on the grid"""
        grid = np.asarray(query_grid, dtype=float)
        values = np.asarray(mu(grid), dtype=float) * np.ones_like(grid)
        return cls(
            query_grid=grid,
            mu_tilde=values,
            mu_hat=values,
            bandwidth=bandwidth,
            n_obs=n_obs or max(grid.size - 1, 1),
            kernel=kernel or epanechnikov(),
        )

    @property
    def origin_value(self) -> float:
        """mu_tilde(0); the grid must start at the anchor 0"""
        if self.query_grid.size == 0 or self.query_grid[0] != 0.0:
            raise ValueError("Fit grid does not start at the anchor point 0")
        return float(self.mu_tilde[0])

    @property
    def grid_size(self) -> int:
        """Number N of Riemann knots after the anchor"""
        return int(self.query_grid.size - 1)

    def deviations(self) -> np.ndarray:
        """mu_tilde(i/N) - mu_tilde(0) for i = 1..N"""
        return self.mu_tilde[1:] - self.origin_value

    def uncorrected(self) -> "MeanFit":
        """Same fit with the plain local linear estimate in place of the Jackknife one"""
        return MeanFit(
            query_grid=self.query_grid,
            mu_tilde=self.mu_hat,
            mu_hat=self.mu_hat,
            bandwidth=self.bandwidth,
            n_obs=self.n_obs,
            kernel=self.kernel,
        )


class BandedCovariance(BaseModel):
    """Banded Toeplitz estimate of the error covariance matrix"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    band_width: int = Field(..., ge=0, description="Largest retained lag")
    autocovariances: np.ndarray = Field(..., description="Sample autocovariances at lags 0..band_width")
    ridge: float = Field(0.0, ge=0, description="Ridge added to the diagonal")
    size: int = Field(..., ge=1, description="Matrix dimension n")

    @field_validator("autocovariances", mode="before")
    @classmethod
    def validate_autocovariances(cls, v):
        return _readonly(v)

    @model_validator(mode="after")
    def validate_band(self):
        if self.autocovariances.size != self.band_width + 1:
            raise ValueError("Need one autocovariance per lag 0..band_width")
        if self.band_width >= self.size:
            raise ValueError("Band width must be smaller than the matrix size")
        return self

    def upper_bands(self) -> np.ndarray:
        """Upper banded storage as expected by scipy.linalg.solveh_banded"""
        ab = np.zeros((self.band_width + 1, self.size))
        for lag in range(self.band_width + 1):
            value = self.autocovariances[lag] + (self.ridge if lag == 0 else 0.0)
            ab[self.band_width - lag, lag:] = value
        return ab

    @property
    def entries(self) -> np.ndarray:
        """Dense symmetric n x n matrix including the ridge"""
        column = np.zeros(self.size)
        column[: self.band_width + 1] = self.autocovariances
        column[0] += self.ridge
        return linalg.toeplitz(column)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Gamma^{-1} rhs by a banded Cholesky solve"""
        return linalg.solveh_banded(self.upper_bands(), rhs)


class LrvCurve(BaseModel):
    """Pointwise long-run variance estimates"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: np.ndarray = Field(..., description="Evaluation points in [0, 1]")
    sigma2: np.ndarray = Field(..., description="Nonnegative estimates of sigma^2(t)")
    m: int = Field(..., ge=1, description="Block length")
    tau: float = Field(..., gt=0, lt=1, description="Smoothing bandwidth")

    @field_validator("grid", "sigma2", mode="before")
    @classmethod
    def validate_arrays(cls, v):
        return _readonly(v)

    @model_validator(mode="after")
    def validate_values(self):
        if self.grid.shape != self.sigma2.shape:
            raise ValueError("grid and sigma2 must have the same shape")
        if np.any(self.sigma2 < 0):
            raise ValueError("Long-run variance estimates must be nonnegative")
        return self

    def at(self, t) -> np.ndarray:
        """Linear interpolation of the curve at t"""
        return np.interp(np.asarray(t, dtype=float), self.grid, self.sigma2)

    def scaled(self, factor: float) -> "LrvCurve":
        return LrvCurve(grid=self.grid, sigma2=self.sigma2 * factor, m=self.m, tau=self.tau)


class LrvMatrixCurve(BaseModel):
    """Long-run covariance matrices of a multivariate series"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    grid: np.ndarray = Field(..., description="Evaluation points in [0, 1]")
    matrices: np.ndarray = Field(..., description="Array of shape (len(grid), m, m)")
    m_block: int = Field(..., ge=1, description="Block length")
    tau: float = Field(..., gt=0, lt=1, description="Smoothing bandwidth")

    @field_validator("grid", "matrices", mode="before")
    @classmethod
    def validate_arrays(cls, v):
        return _readonly(v)

    @model_validator(mode="after")
    def validate_matrices(self):
        if self.matrices.ndim != 3 or self.matrices.shape[0] != self.grid.size:
            raise ValueError("matrices must have shape (len(grid), m, m)")
        if self.matrices.shape[1] != self.matrices.shape[2]:
            raise ValueError("Long-run covariance matrices must be square")
        if not np.allclose(self.matrices, np.swapaxes(self.matrices, 1, 2)):
            raise ValueError("Long-run covariance matrices must be symmetric")
        return self

    def at(self, t) -> np.ndarray:
        """Entrywise linear interpolation, shape (len(t), m, m)"""
        points = np.atleast_1d(np.asarray(t, dtype=float))
        dim = self.matrices.shape[1]
        flat = self.matrices.reshape(self.grid.size, dim * dim)
        out = np.column_stack([np.interp(points, self.grid, flat[:, k]) for k in range(dim * dim)])
        return out.reshape(points.size, dim, dim)

    def square_roots(self, t) -> np.ndarray:
        """Symmetric PSD square roots at t via eigendecomposition"""
        mats = self.at(t)
        eigvals, eigvecs = np.linalg.eigh(mats)
        eigvals = np.clip(eigvals, 0.0, None)
        return np.einsum("kij,kj,klj->kil", eigvecs, np.sqrt(eigvals), eigvecs)
