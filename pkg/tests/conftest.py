import numpy as np
import pytest

from app.schemas.fit import MeanFit, excess_grid
from app.schemas.series import TimeSeries
from app.schemas.simulation import ErrorModel, ErrorModelName, MeanModel
from app.services.excess_service import ExcessService
from app.services.lrv_service import LrvService
from app.services.regression_service import RegressionService
from app.services.simulation_service import simulate_series
from app.services.testing_service import RelevantTestService
from app.utils.kernels import epanechnikov


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def kernel():
    return epanechnikov()


@pytest.fixture
def regression():
    return RegressionService(max_workers=1)


@pytest.fixture
def lrv_service():
    return LrvService(max_workers=1)


@pytest.fixture
def excess_service():
    return ExcessService()


@pytest.fixture
def testing_service(regression, lrv_service):
    return RelevantTestService(regression=regression, lrv=lrv_service)


@pytest.fixture
def parabola():
    """Mean model (a): 8(-(t - 0.5)^2 + 0.25)"""
    return MeanModel(name="a")


@pytest.fixture
def model_a_series(parabola):
    return simulate_series(parabola, ErrorModel(name=ErrorModelName.MODEL_I), n=500, seed=7)


@pytest.fixture
def linear_series():
    n = 200
    return TimeSeries(values=2.0 * np.arange(1, n + 1) / n)


def plug_in_fit(mu, grid_size: int, bandwidth: float = 0.0, n_obs=None) -> MeanFit:
    """True mean evaluated on the anchor 0 and the knots i/N"""
    return MeanFit.from_function(mu, excess_grid(grid_size), bandwidth=bandwidth, n_obs=n_obs)


@pytest.fixture
def exact_fit():
    return plug_in_fit
