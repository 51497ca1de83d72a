import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from app.utils.kernels import (
    KernelSpec,
    SQRT2,
    available_kernels,
    derive_jackknife,
    epanechnikov,
    get_kernel,
    kernel_constants,
    quad_integral,
    register_kernel,
)


def test_epanechnikov_values(kernel):
    assert kernel.evaluate(0.0) == pytest.approx(0.75)
    assert kernel.evaluate(1.5) == 0.0
    assert kernel.evaluate(-1.0001) == 0.0
    x = np.linspace(-1.2, 1.2, 49)
    assert_allclose(kernel.evaluate(x), kernel.evaluate(-x))


def test_epanechnikov_cdf(kernel):
    assert kernel.cdf(-1.0) == pytest.approx(0.0, abs=1e-15)
    assert kernel.cdf(0.0) == pytest.approx(0.5)
    assert kernel.cdf(1.0) == pytest.approx(1.0)
    assert kernel.cdf(-0.5) == pytest.approx(0.15625)
    assert kernel.cdf(-3.0) == 0.0
    assert kernel.cdf(3.0) == 1.0
    values = kernel.cdf(np.linspace(-1.5, 1.5, 301))
    assert np.all(np.diff(values) >= 0.0)


def test_epanechnikov_cdf_stays_in_unit_interval(kernel):
    x = np.concatenate([
        -1.0 + np.logspace(-12, -1, 200),
        1.0 - np.logspace(-12, -1, 200),
        np.linspace(-1.0, 1.0, 2001),
    ])
    values = kernel.cdf(x)
    assert values.min() >= 0.0
    assert values.max() <= 1.0
    assert_allclose(values, 0.5 + 0.75 * (x - x ** 3 / 3.0), atol=1e-14)


def test_cdf_derivative_matches_density(kernel):
    x = np.linspace(-0.99, 0.99, 101)
    step = 1e-6
    derivative = (kernel.cdf(x + step) - kernel.cdf(x - step)) / (2.0 * step)
    assert np.max(np.abs(derivative - kernel.evaluate(x))) <= 1e-6


def test_epanechnikov_moments_match_quadrature(kernel):
    density = lambda x: 0.75 * (1.0 - x ** 2)
    numeric = KernelSpec(name="numeric", density=density)
    assert kernel.moments == pytest.approx((0.5, 3.0 / 16.0, 0.1, 1.0 / 16.0), abs=1e-12)
    assert_allclose(numeric.moments, kernel.moments, atol=1e-10)
    assert numeric.square_integral == pytest.approx(0.6, abs=1e-10)
    assert quad_integral(lambda x: float(kernel.evaluate(x)), -1.0, 1.0) == pytest.approx(1.0, abs=1e-10)


def test_numeric_cdf_without_closed_form(kernel):
    numeric = KernelSpec(name="numeric", density=lambda x: 0.75 * (1.0 - x ** 2))
    x = np.array([-1.0, -0.3, 0.0, 0.45, 1.0])
    assert_allclose(numeric.cdf(x), kernel.cdf(x), atol=1e-10)


def test_kernel_constants(kernel):
    c0, c2 = kernel_constants(kernel)
    assert c0 == pytest.approx(1.0 / 20.0 - 9.0 / 256.0, abs=1e-15)
    assert c0 == pytest.approx(0.0148438, abs=1e-7)
    assert c2 == pytest.approx(1.0 / 100.0 - 3.0 / 256.0, abs=1e-15)


def test_kernel_constants_with_vanishing_odd_moments():
    flat = KernelSpec(
        name="flat",
        density=lambda x: np.full_like(x, 0.5),
        moments=(0.5, 0.0, 1.0 / 6.0, 0.0),
        square_integral=0.5,
    )
    c0, c2 = kernel_constants(flat)
    assert c0 == pytest.approx(0.5 / 6.0)
    assert c2 == pytest.approx(1.0 / 36.0)


def test_jackknife_kernel_moments(kernel):
    jackknife = derive_jackknife(kernel)
    assert jackknife.k_star_at_zero == pytest.approx((2.0 * SQRT2 - 1.0) * 0.75)
    assert jackknife.k_star_at_zero == pytest.approx(1.371320, abs=1e-6)
    for power, expected in ((0, 1.0), (1, 0.0), (2, 0.0)):
        value = quad_integral(lambda x: x ** power * float(jackknife.k_star(x)), -1.0, 1.0)
        assert value == pytest.approx(expected, abs=1e-10)


def test_jackknife_kernel_definitions(kernel):
    jackknife = derive_jackknife(kernel)
    x = np.linspace(-1.2, 1.2, 97)
    assert_allclose(jackknife.k_star(x), 2.0 * SQRT2 * kernel.evaluate(SQRT2 * x) - kernel.evaluate(x))
    assert np.all(jackknife.k_star(np.array([-1.01, 1.01])) == 0.0)
    # both boundary kernels integrate to one over [0, 1]
    assert quad_integral(lambda v: float(jackknife.k_bar(v)), 0.0, 1.0) == pytest.approx(1.0, abs=1e-10)
    assert quad_integral(lambda v: float(jackknife.k_bar_star(v)), 0.0, 1.0) == pytest.approx(1.0, abs=1e-10)


def test_derive_jackknife_is_cached(kernel):
    assert derive_jackknife(kernel) is derive_jackknife(kernel)


def test_kernel_registry():
    assert "epanechnikov" in available_kernels()
    assert get_kernel("Epanechnikov") is epanechnikov()
    with pytest.raises(ValueError, match="Unknown kernel"):
        get_kernel("gaussian")

    register_kernel("biweight", lambda: KernelSpec(
        name="biweight", density=lambda x: 15.0 / 16.0 * (1.0 - x ** 2) ** 2
    ))
    biweight = get_kernel("biweight")
    assert biweight.moments[0] == pytest.approx(0.5, abs=1e-10)
    assert biweight.square_integral == pytest.approx(5.0 / 7.0, abs=1e-10)
    assert biweight.cdf(0.0) == pytest.approx(0.5, abs=1e-10)
    assert math.isclose(float(biweight.evaluate(2.0)), 0.0)
