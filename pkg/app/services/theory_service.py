"""Closed-form asymptotic variances of the excess-measure estimators.

The regular case covers the uncorrected local linear statistic; the critical
case covers the Jackknife statistic with roots of arbitrary critical order in
the two bandwidth regimes (b_n^{v+1}/h_d -> inf, and b_n/h_d^{1/(v+1)} -> r).
"""
from typing import Callable, Optional, Sequence
import logging
import math

import numpy as np

from app.core.errors import ZeroDerivative
from app.schemas.theory import CriticalRoot, CriticalTheory, RegularRoot, RegularTheory, SideTheory
from app.utils.kernels import KernelSpec, derive_jackknife, epanechnikov, kernel_constants, quad_integral

logger = logging.getLogger(__name__)

SigmaFunction = Callable[[float], float]

# Gauss-Legendre nodes per piece of [-1, 1] split at the kinks of K*
_GL_NODES = 24
_PIECES = (-1.0, -1.0 / math.sqrt(2.0), 0.0, 1.0 / math.sqrt(2.0), 1.0)


def _piecewise_gauss_legendre():
    x, w = np.polynomial.legendre.leggauss(_GL_NODES)
    nodes, weights = [], []
    for lo, hi in zip(_PIECES[:-1], _PIECES[1:]):
        nodes.append((hi - lo) / 2.0 * x + (hi + lo) / 2.0)
        weights.append((hi - lo) / 2.0 * w)
    return np.concatenate(nodes), np.concatenate(weights)


class TheoryService:
    """Asymptotic variance oracles for the excess estimators"""

    def __init__(self, kernel: Optional[KernelSpec] = None, k_d: Optional[KernelSpec] = None):
        self.kernel = kernel or epanechnikov()
        self.k_d = k_d or epanechnikov()
        self.jackknife = derive_jackknife(self.kernel)

    def boundary_integral(self) -> float:
        """int_0^1 (mu2 - t mu1)^2 K^2(t) dt"""
        _, mu1, mu2, _ = self.kernel.moments
        return quad_integral(lambda t: ((mu2 - t * mu1) * float(self.kernel.evaluate(t))) ** 2, 0.0, 1.0)

    def theoretical_variance_regular(
            self,
            roots_plus: Sequence[RegularRoot],
            mu0_dd: float,
            sigma: SigmaFunction,
            bandwidth: float = 1.0,
            roots_minus: Optional[Sequence[RegularRoot]] = None,
    ) -> RegularTheory:
        """tau_1^2, tau_2^2 and the bias of the uncorrected estimator; sigma is the long-run sd"""
        for root in list(roots_plus) + list(roots_minus or []):
            if root.first_derivative == 0.0:
                raise ZeroDerivative(
                    f"Root at t = {root.t} has zero slope, use the critical-order variance",
                    details={"t": root.t},
                )

        c0, c2 = kernel_constants(self.kernel)
        _, _, mu2, _ = self.kernel.moments
        boundary = self.boundary_integral()
        sigma0 = sigma(0.0) ** 2

        def side(roots):
            inverse_slopes = sum(1.0 / abs(r.first_derivative) for r in roots)
            tau1 = sum(sigma(r.t) ** 2 / r.first_derivative ** 2 for r in roots) * self.kernel.square_integral
            tau2 = sigma0 / c0 ** 2 * inverse_slopes ** 2 * boundary
            bias = (mu2 * bandwidth ** 2 * sum(r.second_derivative / abs(r.first_derivative) for r in roots)
                    - bandwidth ** 2 * c2 * mu0_dd / (2.0 * c0) * inverse_slopes)
            return tau1, tau2, bias, inverse_slopes

        tau1, tau2, bias, inverse_plus = side(roots_plus)
        if roots_minus is None:
            return RegularTheory(tau1sq=tau1, tau2sq=tau2, bias=bias)

        tau1_m, tau2_m, bias_m, inverse_minus = side(roots_minus)
        sigma12 = -sigma0 / c0 ** 2 * inverse_plus * inverse_minus * boundary
        return RegularTheory(
            tau1sq=tau1, tau2sq=tau2, bias=bias,
            tau1sq_minus=tau1_m, tau2sq_minus=tau2_m, bias_minus=bias_m,
            sigma12=sigma12,
        )

    def indicator_integral(self, order: int) -> float:
        """int K_d(z^{v+1}) dz"""
        return quad_integral(lambda z: float(self.k_d.evaluate(z ** (order + 1))), -1.0, 1.0)

    def theoretical_variance_critical(
            self,
            roots_plus: Sequence[CriticalRoot],
            sigma: SigmaFunction,
            roots_minus: Optional[Sequence[CriticalRoot]] = None,
            regime: str = "a",
            ratio: Optional[float] = None,
    ) -> CriticalTheory:
        """Covariance of (T+, T-) for the Jackknife estimators"""
        if regime not in ("a", "b"):
            raise ValueError(f"Unknown regime '{regime}', expected 'a' or 'b'")
        if regime == "b" and (ratio is None or ratio < 0):
            raise ValueError("Regime b needs a nonnegative ratio r = b_n / h_d^{1/(v+1)}")

        k_star_sq = quad_integral(lambda x: float(self.jackknife.k_star(x)) ** 2, -1.0, 1.0)
        k_bar_star_sq = quad_integral(lambda x: float(self.jackknife.k_bar_star(x)) ** 2, 0.0, 1.0)
        sigma0 = sigma(0.0) ** 2

        def dominant(roots):
            order = max(r.order for r in roots)
            return order, [r for r in roots if r.order == order]

        def side(roots) -> SideTheory:
            for root in roots:
                if root.derivative == 0.0:
                    raise ZeroDerivative(f"Root at t = {root.t} has zero derivative of order v+1")
            order, top = dominant(roots)
            p = order + 1
            factorial = math.factorial(p)
            indicator = self.indicator_integral(order)
            sigma1 = (indicator ** 2 * factorial ** (2.0 / p)
                      * sum(sigma(r.t) ** 2 / abs(r.derivative) ** (2.0 / p) for r in top) * k_star_sq)
            sigma2 = (sigma0 * factorial ** (2.0 / p) * k_bar_star_sq
                      * sum(abs(r.derivative) ** (-1.0 / p) * indicator for r in top) ** 2)
            if regime == "a":
                return SideTheory(order=order, sigma1sq=sigma1, sigma2sq=sigma2)

            rho1 = factorial ** (1.0 / p) * sum(
                sigma(r.t) ** 2 / abs(r.derivative) ** (2.0 / p)
                * self._shifted_indicator_integral(order, ratio * abs(factorial / r.derivative) ** (-1.0 / p))
                for r in top
            )
            rho2 = math.inf if ratio == 0 else sigma2 / ratio
            return SideTheory(order=order, sigma1sq=sigma1, sigma2sq=sigma2, rho1sq=rho1, rho2sq=rho2)

        plus = side(roots_plus) if roots_plus else None
        minus = side(roots_minus) if roots_minus else None

        sigma12 = None
        if plus is not None and minus is not None:
            weights = []
            for roots, theory in ((roots_plus, plus), (roots_minus, minus)):
                p = theory.order + 1
                _, top = dominant(roots)
                weights.append(math.factorial(p) ** (1.0 / p) * sum(
                    self.indicator_integral(theory.order) / abs(r.derivative) ** (1.0 / p) for r in top
                ))
            sigma12 = -sigma0 * k_bar_star_sq * weights[0] * weights[1]

        s11 = plus.variance if plus else 0.0
        s22 = minus.variance if minus else 0.0
        s12 = sigma12 or 0.0
        v_plus = plus.order if plus else -1
        v_minus = minus.order if minus else -1
        total = (s11 * (v_plus >= v_minus) + s22 * (v_plus <= v_minus)
                 + 2.0 * s12 * (v_plus == v_minus))
        logger.debug(f"Critical theory regime {regime}: Sigma = [[{s11}, {s12}], [{s12}, {s22}]]")
        return CriticalTheory(
            regime=regime,
            ratio=ratio,
            plus=plus,
            minus=minus,
            sigma12=sigma12,
            covariance=[[s11, s12], [s12, s22]],
            total_variance=float(total),
        )

    def _shifted_indicator_integral(self, order: int, shift: float) -> float:
        """int int int K*(u) K*(v) K_d(z^{v+1}) K_d((z + shift (v - u))^{v+1}) du dv dz"""
        nodes, weights = _piecewise_gauss_legendre()
        p = order + 1
        k_star = self.jackknife.k_star(nodes) * weights
        z_term = self.k_d.evaluate(nodes ** p) * weights
        # axes: z, u, v
        argument = nodes[:, None, None] + shift * (nodes[None, None, :] - nodes[None, :, None])
        shifted = self.k_d.evaluate(argument ** p)
        return float(np.einsum("z,u,v,zuv->", z_term, k_star, k_star, shifted))
