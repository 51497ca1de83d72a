"""Smoothing kernels on [-1, 1], their moments and Jackknife transforms.

All kernels are symmetric, compactly supported and normalised. Moments
``mu_l = int_0^1 x^l K(x) dx`` (l = 0..3) and the square integral are cached
at construction; kernels without a registered closed form get them from
adaptive quadrature.
"""
import logging
import math
from functools import lru_cache
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

SQRT2 = math.sqrt(2.0)
QUAD_TOLERANCE = 1e-12
# Kinks of K(sqrt(2) x) and of the truncated kernels, passed to quad as break points
_BREAK_POINTS = (-1.0 / SQRT2, 0.0, 1.0 / SQRT2)


def quad_integral(func: Callable[[float], float], lower: float, upper: float) -> float:
    """Adaptive quadrature split at the kernel break points inside (lower, upper)"""
    points = [p for p in _BREAK_POINTS if lower < p < upper]
    value, _ = integrate.quad(
        func, lower, upper,
        points=points or None,
        epsabs=QUAD_TOLERANCE,
        epsrel=QUAD_TOLERANCE,
        limit=200,
    )
    return float(value)


def _as_output(x: ArrayLike, values: np.ndarray) -> ArrayLike:
    if np.ndim(x) == 0:
        return float(values)
    return values


class KernelSpec:
    """A symmetric kernel supported on [-1, 1]"""

    def __init__(
            self,
            name: str,
            density: Callable[[np.ndarray], np.ndarray],
            cdf: Optional[Callable[[np.ndarray], np.ndarray]] = None,
            moments: Optional[Sequence[float]] = None,
            square_integral: Optional[float] = None,
    ):
        self.name = name
        self._density = density
        self._cdf = cdf
        if moments is None:
            moments = tuple(
                quad_integral(lambda x, l=l: x ** l * float(self.evaluate(x)), 0.0, 1.0)
                for l in range(4)
            )
        self.moments: Tuple[float, float, float, float] = tuple(float(m) for m in moments)
        if square_integral is None:
            square_integral = quad_integral(lambda x: float(self.evaluate(x)) ** 2, -1.0, 1.0)
        self.square_integral = float(square_integral)

    def evaluate(self, x: ArrayLike) -> ArrayLike:
        """Kernel value, zero outside [-1, 1]"""
        arr = np.asarray(x, dtype=float)
        inside = np.abs(arr) <= 1.0
        values = np.where(inside, self._density(np.where(inside, arr, 0.0)), 0.0)
        return _as_output(x, values)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        """Distribution function int_{-1}^{x} K(u) du"""
        arr = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
        if self._cdf is not None:
            values = self._cdf(arr)
        else:
            values = np.vectorize(
                lambda v: quad_integral(lambda u: float(self.evaluate(u)), -1.0, v) if v > -1.0 else 0.0
            )(arr)
        values = np.where(arr <= -1.0, 0.0, np.where(arr >= 1.0, 1.0, values))
        return _as_output(x, np.asarray(values, dtype=float))

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return self.evaluate(x)

    def __repr__(self) -> str:
        return f"KernelSpec(name={self.name!r})"


def _epanechnikov_density(x: np.ndarray) -> np.ndarray:
    return 0.75 * (1.0 - x ** 2)


def _epanechnikov_cdf(x: np.ndarray) -> np.ndarray:
    # factored tails keep the values inside [0, 1] in floating point
    lower = (1.0 + x) ** 2 * (2.0 - x) / 4.0
    upper = 1.0 - (1.0 - x) ** 2 * (2.0 + x) / 4.0
    return np.where(x <= 0.0, lower, upper)


@lru_cache(maxsize=None)
def epanechnikov() -> KernelSpec:
    """Epanechnikov kernel 0.75(1 - x^2) with closed-form CDF and moments"""
    return KernelSpec(
        name="epanechnikov",
        density=_epanechnikov_density,
        cdf=_epanechnikov_cdf,
        moments=(0.5, 3.0 / 16.0, 0.1, 1.0 / 16.0),
        square_integral=0.6,
    )


def kernel_constants(kernel: KernelSpec) -> Tuple[float, float]:
    """Return (c0, c2) = (mu0 mu2 - mu1^2, mu2^2 - mu1 mu3)"""
    mu0, mu1, mu2, mu3 = kernel.moments
    return mu0 * mu2 - mu1 ** 2, mu2 ** 2 - mu1 * mu3


class JackknifeKernels:
    """Equivalent kernels of the Jackknife estimator 2 mu_{b/sqrt2} - mu_b.

    ``k_star`` is the interior kernel, ``k_bar_star`` the boundary kernel that
    drives the estimate at t = 0.
    """

    def __init__(self, kernel: KernelSpec):
        self.kernel = kernel
        self.c0, self.c2 = kernel_constants(kernel)
        self.k_star_at_zero = (2.0 * SQRT2 - 1.0) * float(kernel.evaluate(0.0))

    def k_star(self, x: ArrayLike) -> ArrayLike:
        arr = np.asarray(x, dtype=float)
        values = 2.0 * SQRT2 * self.kernel.evaluate(SQRT2 * arr) - self.kernel.evaluate(arr)
        return _as_output(x, np.asarray(values))

    def k_bar(self, x: ArrayLike) -> ArrayLike:
        _, mu1, mu2, _ = self.kernel.moments
        arr = np.asarray(x, dtype=float)
        values = (mu2 - arr * mu1) * self.kernel.evaluate(arr) / self.c0
        return _as_output(x, np.asarray(values))

    def k_bar_star(self, x: ArrayLike) -> ArrayLike:
        arr = np.asarray(x, dtype=float)
        values = 2.0 * SQRT2 * self.k_bar(SQRT2 * arr) - self.k_bar(arr)
        return _as_output(x, np.asarray(values))


@lru_cache(maxsize=None)
def derive_jackknife(kernel: KernelSpec) -> JackknifeKernels:
    """Jackknife kernels of ``kernel`` (cached per kernel instance)"""
    return JackknifeKernels(kernel)


_KERNEL_REGISTRY: Dict[str, Callable[[], KernelSpec]] = {
    "epanechnikov": epanechnikov,
}


def register_kernel(name: str, factory: Callable[[], KernelSpec]) -> None:
    """Make a kernel selectable by name"""
    key = name.lower()
    if key in _KERNEL_REGISTRY:
        logger.warning(f"Replacing registered kernel: {key}")
    _KERNEL_REGISTRY[key] = factory


def get_kernel(name: str) -> KernelSpec:
    """Look up a kernel by name"""
    try:
        return _KERNEL_REGISTRY[name.lower()]()
    except KeyError:
        raise ValueError(
            f"Unknown kernel '{name}'. Available: {', '.join(sorted(_KERNEL_REGISTRY))}"
        ) from None


def available_kernels() -> Tuple[str, ...]:
    return tuple(sorted(_KERNEL_REGISTRY))
