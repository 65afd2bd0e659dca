"""W-invariant generalized Hermite polynomials.

For the dihedral system they factor as a Laguerre polynomial in rho**2/2
times a W-invariant harmonic rho**(2jp) P_j(cos 2p phi), with P_j the
orthonormal angular Jacobi polynomial.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.special

import dunkl.dihedral
import dunkl.errors
import dunkl.series
import dunkl.spectral
import dunkl.specfun


@dataclasses.dataclass(frozen=True)
class HermiteIndex:
    """Index (q, j): Laguerre degree q and harmonic degree j."""

    q: int
    j: int

    def __post_init__(self) -> None:
        if self.q < 0 or self.j < 0:
            raise dunkl.errors.DomainError(
                f"Hermite index must be nonnegative: ({self.q}, {self.j})"
            )

    def degree(self, sys: dunkl.dihedral.DihedralSystem) -> float:
        return 2 * self.q + 2 * self.j * sys.p


def _angular(sys, j: int, phi):
    phi = dunkl.dihedral.fold(sys, phi)
    params = dunkl.specfun.angular_params(sys)
    return dunkl.specfun.jacobi_p(
        j, params, np.cos(2 * sys.p * phi), normalized=True
    )


def w_invariant_harmonic(sys, j: int, x: dunkl.dihedral.PolarPoint) -> float:
    """h_j(rho, phi) = rho**(2jp) P_j(cos 2p phi)."""
    if j < 0:
        raise dunkl.errors.DomainError(f"j must be >= 0: {j}")
    return float(x.r ** (2 * j * sys.p) * _angular(sys, j, x.theta))


def _log_norm(sys, idx: HermiteIndex) -> float:
    """log sqrt(q! / Gamma(2jp + q + gamma + 1))."""
    alpha = 2 * idx.j * sys.p + sys.gamma
    return 0.5 * (
        scipy.special.gammaln(idx.q + 1)
        - scipy.special.gammaln(alpha + idx.q + 1)
    )


def hermite_w(sys, idx: HermiteIndex, x: dunkl.dihedral.PolarPoint) -> float:
    """W-invariant Hermite polynomial H_{(2q, 2jp)} at x."""
    half_sq = x.r * x.r / 2
    alpha = 2 * idx.j * sys.p + sys.gamma
    radial = (
        math.exp(_log_norm(sys, idx))
        * half_sq ** (idx.j * sys.p)
        * dunkl.specfun.laguerre_l(idx.q, alpha, half_sq)
    )
    return float(radial * _angular(sys, idx.j, x.theta))


def radial_coefficients(sys, idx: HermiteIndex) -> np.ndarray:
    """Coefficients c_i of rho**(2jp + 2i), i = 0..q, in hermite_w / P_j.

    Uses L_q^a(X) = sum_i (-1)**i binom(q + a, q - i) X**i / i!.
    """
    alpha = 2 * idx.j * sys.p + sys.gamma
    i = np.arange(idx.q + 1, dtype=float)
    log_binom = (
        scipy.special.gammaln(idx.q + alpha + 1)
        - scipy.special.gammaln(idx.q - i + 1)
        - scipy.special.gammaln(alpha + i + 1)
    )
    log_size = (
        _log_norm(sys, idx)
        + log_binom
        - scipy.special.gammaln(i + 1)
        - (idx.j * sys.p + i) * math.log(2.0)
    )
    return np.power(-1.0, i) * np.exp(log_size)


def heat_image(sys, q: int, j: int, x: dunkl.dihedral.PolarPoint) -> float:
    """Closed form of exp(-Delta_k / 2) applied to rho**(2q) h_j.

    Equal to (-2)**q q! L_q^{2jp + gamma}(rho**2 / 2) h_j(rho, phi).
    """
    idx = HermiteIndex(q, j)
    alpha = 2 * j * sys.p + sys.gamma
    laguerre = dunkl.specfun.laguerre_l(q, alpha, x.r * x.r / 2)
    return float(
        (-2.0) ** q * math.factorial(q) * laguerre
        * w_invariant_harmonic(sys, idx.j, x)
    )


def _check_scale(r: float) -> None:
    if not 0 < r < 1:
        raise dunkl.errors.DomainError(
            f"Mehler variable must lie in (0, 1): {r}"
        )


def mehler_sum(sys, x, y, r: float, control=None) -> float:
    """Generating sum of H(x) H(y) r**|tau| up to total degree degree_max.

    Terms are accumulated in order of total degree.
    """
    ctl = dunkl.series.resolve(control)
    _check_scale(r)
    params = dunkl.specfun.angular_params(sys)
    half_x, half_y = x.r * x.r / 2, y.r * y.r / 2
    u = math.cos(2 * sys.p * float(dunkl.dihedral.fold(sys, x.theta)))
    v = math.cos(2 * sys.p * float(dunkl.dihedral.fold(sys, y.theta)))
    left = dunkl.specfun.iter_jacobi(params, u)
    right = dunkl.specfun.iter_jacobi(params, v)
    terms = []
    j = 0
    while 2 * j * sys.p <= ctl.degree_max:
        angular = float(next(left) * next(right))
        q_max = int((ctl.degree_max - 2 * j * sys.p) // 2)
        alpha = 2 * j * sys.p + sys.gamma
        lag_x = dunkl.specfun.laguerre_table(q_max, alpha, half_x)
        lag_y = dunkl.specfun.laguerre_table(q_max, alpha, half_y)
        harmonic = (half_x * half_y * r * r) ** (j * sys.p)
        for q in range(q_max + 1):
            norm = math.exp(
                scipy.special.gammaln(q + 1)
                - scipy.special.gammaln(alpha + q + 1)
            )
            term = norm * harmonic * lag_x[q] * lag_y[q] * angular
            term *= r ** (2 * q)
            terms.append((2 * q + 2 * j * sys.p, float(term)))
        j += 1
    terms.sort(key=lambda item: item[0])
    total = math.fsum(term for _, term in terms)
    top = max(degree for degree, _ in terms)
    tail = max(abs(term) for degree, term in terms if degree == top)
    if tail > math.sqrt(ctl.tol) * abs(total):
        raise dunkl.errors.NonConvergenceError(
            f"Mehler sum not converged at degree {ctl.degree_max} for r={r}",
            terms_used=len(terms),
        )
    return total


def mehler_closed_form(sys, x, y, r: float, control=None) -> float:
    """Closed side of the Mehler identity, through D_k^W.

    (1 - r^2)**(-gamma - 1) exp(-r^2 (|x|^2 + |y|^2) / 2(1 - r^2))
    D(x, r y / (1 - r^2)) H_00**2 / |W|.
    """
    _check_scale(r)
    shrink = 1 - r * r
    scaled = dunkl.dihedral.PolarPoint(r * y.r / shrink, y.theta)
    kernel = dunkl.spectral.generalized_bessel(sys, x, scaled, control).value
    params = dunkl.specfun.angular_params(sys)
    log_h00_sq = -dunkl.specfun.jacobi_log_norm(
        0, params
    ) - scipy.special.gammaln(sys.gamma + 1)
    log_front = (
        -(sys.gamma + 1) * math.log(shrink)
        - r * r * (x.r**2 + y.r**2) / (2 * shrink)
        + log_h00_sq
        - math.log(sys.group_order)
    )
    return math.exp(log_front) * kernel


def mehler_check(sys, x, y, r: float, control=None) -> float:
    """Relative residual |sum - closed form| / |closed form|."""
    closed = mehler_closed_form(sys, x, y, r, control)
    return abs(mehler_sum(sys, x, y, r, control) - closed) / abs(closed)
