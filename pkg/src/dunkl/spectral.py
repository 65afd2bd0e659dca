"""Closed-form spectral kernels of the radial Dunkl process.

Densities are taken with respect to dr dtheta. The angular factor of every
Jacobi series lives on [0, pi/(2p)]; for odd n that is half the chamber
and the values describe the angle folded across the chamber bisector.
The reflected, killed and conditioned kernels are written on the whole
wedge of opening pi/n and need no folding.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
import math
from typing import Callable

import numpy as np
import scipy.integrate
import scipy.special

import dunkl.dihedral
import dunkl.errors
import dunkl.series
import dunkl.specfun

SeriesControl = dunkl.series.SeriesControl

logger = logging.getLogger(__name__)

# Gauss-Jacobi order for the normalizing constant.
_NORM_ORDER = 32

# Radial truncation: r_max = rho + sqrt(t) * (base + 2 sqrt(2 gamma + 2)).
_RADIAL_TAIL_BASE = 10.0


@dataclasses.dataclass(frozen=True)
class DensityValue:
    """A density value, or an array of them, with truncation details.

    Attributes:
        value: Density, clamped at zero.
        terms_used: Number of series terms summed.
        truncation_bound: Largest magnitude of the last summed term.
        clamped: True when a negative truncation residue was clamped.
    """

    value: float | np.ndarray
    terms_used: int
    truncation_bound: float
    clamped: bool = False


def _check_time(t: float) -> None:
    if not t > 0:
        raise dunkl.errors.DomainError(f"time must be positive: {t}")


def _finish(values, acc, control, label: str, scale=1.0) -> DensityValue:
    values = np.asarray(values, dtype=float)
    negative = values < 0
    clamped = bool(np.any(negative))
    if clamped:
        worst = float(np.min(values))
        if worst < -control.tol:
            logger.warning("%s: clamped negative value %.3e", label, worst)
        values = np.where(negative, 0.0, values)
    terms = acc.terms_used if acc is not None else 1
    bound = acc.truncation_bound * scale if acc is not None else 0.0
    value = float(values) if values.ndim == 0 else values
    return DensityValue(value, terms, bound, clamped)


def angular_eigenvalue(sys: dunkl.dihedral.DihedralSystem, j: int) -> float:
    """Eigenvalue -2j(j + k0 + k1) of the angular generator."""
    if j < 0:
        raise dunkl.errors.DomainError(f"j must be >= 0: {j}")
    return -2.0 * j * (j + sys.k0 + sys.k1)


@functools.lru_cache(maxsize=256)
def normalizing_constant(sys: dunkl.dihedral.DihedralSystem) -> float:
    """c_k: mass of sin^{2k0} cos^{2k1}(p theta) P_0**2 over [0, pi/(2p)].

    Computed in x = cos(2p theta), where the weight becomes a Jacobi weight
    times 2**(-k0-k1) / (2p).
    """
    params = dunkl.specfun.angular_params(sys)
    nodes, weights = dunkl.specfun.gauss_jacobi(_NORM_ORDER, params.a, params.b)
    p0 = dunkl.specfun.jacobi_p(0, params, nodes, normalized=True)
    scale = 2.0 ** (-sys.k0 - sys.k1) / (2 * sys.p)
    return float(np.dot(weights, p0 * p0)) * scale


@functools.lru_cache(maxsize=256)
def bessel_constant(sys: dunkl.dihedral.DihedralSystem) -> float:
    """c_{p,k} = |W| Gamma(gamma + 1) / P_0**2, fixing D(0, y) = |W|."""
    params = dunkl.specfun.angular_params(sys)
    log_p0_sq = -dunkl.specfun.jacobi_log_norm(0, params)
    return math.exp(
        math.log(sys.group_order)
        + scipy.special.gammaln(sys.gamma + 1)
        - log_p0_sq
    )


def angular_measure(sys: dunkl.dihedral.DihedralSystem, theta):
    """Reversible angular density sin^{2k0} cos^{2k1}(p theta) / c_k."""
    angle = sys.p * np.asarray(theta, dtype=float)
    mass = np.power(np.abs(np.sin(angle)), 2 * sys.k0) * np.power(
        np.abs(np.cos(angle)), 2 * sys.k1
    )
    return mass / normalizing_constant(sys)


def _jacobi_sum(sys, phi, theta, radial: Callable, shape, control, label):
    """Sum radial(j) * P_j(cos 2p phi) * P_j(cos 2p theta) over j."""
    params = dunkl.specfun.angular_params(sys)
    left = dunkl.specfun.iter_jacobi(params, np.cos(2 * sys.p * phi))
    right = dunkl.specfun.iter_jacobi(params, np.cos(2 * sys.p * theta))
    acc = dunkl.series.SeriesAccumulator(shape, control, label)
    for j in range(control.max_terms):
        if acc.add(radial(j) * next(left) * next(right)):
            return acc
    acc.fail()


def angular_density(
    sys: dunkl.dihedral.DihedralSystem,
    t: float,
    phi,
    theta,
    control: SeriesControl | None = None,
    chamber: bool = False,
) -> DensityValue:
    """Angular transition density.

    With chamber=False this is m_t on [0, pi/2], the p = 1 kernel. With
    chamber=True it is K_t(phi, theta) = p m_{p^2 t}(p phi, p theta) on
    [0, pi/(2p)], the law of the angle of the process on the additive
    clock.
    """
    ctl = dunkl.series.resolve(control)
    _check_time(t)
    base = sys if chamber else dataclasses.replace(sys, p=1)
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    shape = np.broadcast_shapes(phi.shape, theta.shape)
    scale = base.p**2 * t

    def radial(j: int) -> float:
        return math.exp(angular_eigenvalue(base, j) * scale)

    acc = _jacobi_sum(base, phi, theta, radial, shape, ctl, "angular density")
    values = angular_measure(base, theta) * acc.total
    return _finish(values, acc, ctl, "angular density")


def bessel_semigroup(gamma_idx: float, t: float, rho: float, r):
    """Transition density q_t(rho, r) of the Bessel process of index gamma."""
    _check_time(t)
    r = np.asarray(r, dtype=float)
    if rho == 0:
        with np.errstate(divide="ignore"):
            log_value = (
                (2 * gamma_idx + 1) * np.log(r)
                - r * r / (2 * t)
                - gamma_idx * math.log(2.0)
                - scipy.special.gammaln(gamma_idx + 1)
                - (gamma_idx + 1) * math.log(t)
            )
        value = np.exp(log_value)
    else:
        value = (
            np.power(r / rho, gamma_idx)
            * r
            * np.exp(-((rho - r) ** 2) / (2 * t))
            * scipy.special.ive(gamma_idx, rho * r / t)
            / t
        )
    return float(value) if value.ndim == 0 else value


def conditional_laplace(sys, j: int, t: float, rho: float, r: float) -> float:
    """E[exp(p^2 lambda_j A_t) | |X_0| = rho, |X_t| = r].

    Equals I_nu(rho r / t) / I_gamma(rho r / t) with
    nu = sqrt(gamma^2 - 2 lambda_j p^2) = 2jp + gamma.
    """
    _check_time(t)
    if not (rho > 0 and r > 0):
        raise dunkl.errors.DomainError("conditional_laplace needs rho, r > 0")
    nu = math.sqrt(sys.gamma**2 - 2 * angular_eigenvalue(sys, j) * sys.p**2)
    z = rho * r / t
    return float(scipy.special.ive(nu, z) / scipy.special.ive(sys.gamma, z))


def transition_density_grid(
    sys: dunkl.dihedral.DihedralSystem,
    t: float,
    x: dunkl.dihedral.PolarPoint,
    r,
    theta,
    control: SeriesControl | None = None,
) -> DensityValue:
    """Vectorized transition_density over arrays of end points."""
    ctl = dunkl.series.resolve(control)
    _check_time(t)
    dunkl.dihedral.check_point(sys, x)
    theta = dunkl.dihedral.fold(sys, theta)
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), theta)
    phi = float(dunkl.dihedral.fold(sys, x.theta))
    measure = angular_measure(sys, theta)
    if x.r == 0:
        params = dunkl.specfun.angular_params(sys)
        p0_sq = math.exp(-dunkl.specfun.jacobi_log_norm(0, params))
        values = bessel_semigroup(sys.gamma, t, 0.0, r) * measure * p0_sq
        return _finish(values, None, ctl, "transition density")
    rho = x.r
    z = rho * r / t
    envelope = (
        np.power(r / rho, sys.gamma)
        * r
        * np.exp(-((rho - r) ** 2) / (2 * t))
        / t
    )

    def radial(j: int):
        return envelope * scipy.special.ive(2 * j * sys.p + sys.gamma, z)

    acc = _jacobi_sum(
        sys, phi, theta, radial, r.shape, ctl, "transition density"
    )
    return _finish(measure * acc.total, acc, ctl, "transition density")


def transition_density(
    sys: dunkl.dihedral.DihedralSystem,
    t: float,
    x: dunkl.dihedral.PolarPoint,
    y: dunkl.dihedral.PolarPoint,
    control: SeriesControl | None = None,
) -> DensityValue:
    """Transition density p_t(x, y) of the radial Dunkl process.

    The density is in dr dtheta over [0, angular_span]. For odd n theta is
    the angle folded across the chamber bisector, on [0, pi/(2n)].
    """
    dunkl.dihedral.check_point(sys, y)
    return transition_density_grid(sys, t, x, y.r, y.theta, control)


def _require_multiplicities(sys, k0: float, k1: float, label: str) -> None:
    if sys.k0 != k0 or sys.k1 != k1:
        raise dunkl.errors.RegimeError(
            f"{label} needs (k0, k1) = ({k0}, {k1}), "
            f"got ({sys.k0}, {sys.k1})"
        )


def _wedge_sum(sys, t, x, r, theta, control, label, first: int, mode):
    """Sum over m of I_{mn}(rho r / t) * mode(m) on the wedge of angle pi/n."""
    ctl = dunkl.series.resolve(control)
    _check_time(t)
    dunkl.dihedral.check_point(sys, x)
    r, theta = np.broadcast_arrays(
        np.asarray(r, dtype=float), np.asarray(theta, dtype=float)
    )
    rho = x.r
    z = rho * r / t
    gauss = np.exp(-((rho - r) ** 2) / (2 * t))
    acc = dunkl.series.SeriesAccumulator(r.shape, ctl, label)
    for m in range(first, first + ctl.max_terms):
        term = gauss * scipy.special.ive(m * sys.n, z) * mode(m, theta)
        if acc.add(term):
            return acc, r
    acc.fail()


def reflected_kernel_grid(sys, t, x, r, theta, control=None) -> DensityValue:
    """Vectorized reflected_kernel."""
    _require_multiplicities(sys, 0.0, 0.0, "reflected kernel")
    ctl = dunkl.series.resolve(control)
    alpha = sys.chamber_angle
    phi = x.theta

    def mode(m, theta):
        weight = 1.0 if m == 0 else 2.0
        return weight * math.cos(m * sys.n * phi) * np.cos(m * sys.n * theta)

    acc, r = _wedge_sum(sys, t, x, r, theta, ctl, "reflected kernel", 0, mode)
    return _finish(r / (alpha * t) * acc.total, acc, ctl, "reflected kernel")


def reflected_kernel(sys, t, x, y, control=None) -> DensityValue:
    """Kernel of Brownian motion normally reflected in the chamber (k = 0)."""
    dunkl.dihedral.check_point(sys, y)
    return reflected_kernel_grid(sys, t, x, y.r, y.theta, control)


def killed_kernel_grid(sys, t, x, r, theta, control=None) -> DensityValue:
    """Vectorized killed_kernel."""
    ctl = dunkl.series.resolve(control)
    alpha = sys.chamber_angle
    phi = x.theta

    def mode(m, theta):
        return math.sin(m * sys.n * phi) * np.sin(m * sys.n * theta)

    acc, r = _wedge_sum(sys, t, x, r, theta, ctl, "killed kernel", 1, mode)
    return _finish(2 * r / (alpha * t) * acc.total, acc, ctl, "killed kernel")


def killed_kernel(sys, t, x, y, control=None) -> DensityValue:
    """Kernel of planar Brownian motion killed on the chamber boundary.

    Independent of the multiplicities of sys; only n matters.
    """
    dunkl.dihedral.check_point(sys, y)
    return killed_kernel_grid(sys, t, x, y.r, y.theta, control)


def harmonic_weight(sys, r, theta):
    """omega_1 = r**n sin(n theta), positive harmonic in the chamber."""
    r = np.asarray(r, dtype=float)
    return np.power(r, sys.n) * np.sin(sys.n * np.asarray(theta, dtype=float))


def _conditioned_multiplicities(sys) -> tuple[float, float]:
    return (1.0, 1.0) if sys.parity == "even" else (1.0, 0.0)


def conditioned_kernel_grid(
    sys, t, x, r, theta, control=None, form: str = "sine"
) -> DensityValue:
    """Vectorized conditioned_kernel."""
    _require_multiplicities(
        sys, *_conditioned_multiplicities(sys), "conditioned kernel"
    )
    ctl = dunkl.series.resolve(control)
    if form == "sine":
        start = float(harmonic_weight(sys, x.r, x.theta))
        if start <= 0:
            raise dunkl.errors.DomainError(
                "sine form needs a start point inside the open chamber"
            )
        killed = killed_kernel_grid(sys, t, x, r, theta, ctl)
        ratio = harmonic_weight(sys, r, theta) / start
        values = ratio * np.asarray(killed.value)
        return DensityValue(
            float(values) if values.ndim == 0 else values,
            killed.terms_used,
            killed.truncation_bound,
            killed.clamped,
        )
    if form != "chebyshev":
        raise dunkl.errors.DomainError(f"unknown form: {form}")
    return _conditioned_chebyshev(sys, t, x, r, theta, ctl)


def _conditioned_chebyshev(sys, t, x, r, theta, ctl) -> DensityValue:
    """U_j form: sin(m n phi) = sin(n phi) U_{m-1}(cos n phi)."""
    _check_time(t)
    dunkl.dihedral.check_point(sys, x)
    r, theta = np.broadcast_arrays(
        np.asarray(r, dtype=float), np.asarray(theta, dtype=float)
    )
    rho, n = x.r, sys.n
    alpha = sys.chamber_angle
    u_start = math.cos(n * x.theta)
    u_end = np.cos(n * theta)
    gauss = np.exp(-((rho - r) ** 2) / (2 * t))
    if rho == 0:
        log_radial = n * np.log(np.where(r > 0, r, 1.0) ** 2 / (2 * t))
        leading = np.where(
            r > 0, np.exp(log_radial - scipy.special.gammaln(n + 1)), 0.0
        )
        values = 2 * r / (alpha * t) * gauss * leading * np.sin(n * theta) ** 2
        return _finish(values, None, ctl, "conditioned kernel")
    z = rho * r / t
    ratio = np.power(r / rho, n)
    acc = dunkl.series.SeriesAccumulator(r.shape, ctl, "conditioned kernel")
    prev_s, cur_s = 1.0, 2 * u_start
    prev_e, cur_e = np.ones_like(u_end), 2 * u_end
    for j in range(ctl.max_terms):
        if j == 0:
            left, right = prev_s, prev_e
        else:
            left, right = cur_s, cur_e
            prev_s, cur_s = cur_s, 2 * u_start * cur_s - prev_s
            prev_e, cur_e = cur_e, 2 * u_end * cur_e - prev_e
        term = gauss * ratio * scipy.special.ive(n * (j + 1), z) * left * right
        if acc.add(term):
            break
    else:
        acc.fail()
    values = 2 * r / (alpha * t) * np.sin(n * theta) ** 2 * acc.total
    return _finish(values, acc, ctl, "conditioned kernel")


def conditioned_kernel(sys, t, x, y, control=None, form="sine"):
    """Kernel of Brownian motion conditioned to stay in the chamber (k = 1).

    The sine form is the h-transform omega_1(y)/omega_1(x) of the killed
    kernel; the chebyshev form sums the same series with U_j and also
    covers starts on the boundary.
    """
    dunkl.dihedral.check_point(sys, y)
    return conditioned_kernel_grid(sys, t, x, y.r, y.theta, control, form)


def _bessel_series(sys, x, r, theta, ctl):
    """Series of D(x, y) with exp(|x||y|) (2/|x||y|)**gamma factored out.

    Returns (w, log_scale, acc) with w = |x||y|; wherever w > 0,
    D = c_{p,k} exp(log_scale) acc.total.
    """
    dunkl.dihedral.check_point(sys, x)
    theta = dunkl.dihedral.fold(sys, theta)
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), theta)
    phi = float(dunkl.dihedral.fold(sys, x.theta))
    w = x.r * r
    if np.all(w == 0):
        return w, None, None
    safe = np.where(w > 0, w, 1.0)
    log_scale = safe + sys.gamma * np.log(2.0 / safe)

    def radial(j: int):
        return scipy.special.ive(2 * j * sys.p + sys.gamma, safe)

    acc = _jacobi_sum(
        sys, phi, theta, radial, r.shape, ctl, "generalized Bessel"
    )
    return w, log_scale, acc


def generalized_bessel_grid(sys, x, r, theta, control=None) -> DensityValue:
    """Vectorized generalized_bessel over end points (r, theta)."""
    ctl = dunkl.series.resolve(control)
    w, log_scale, acc = _bessel_series(sys, x, r, theta, ctl)
    if acc is None:
        values = np.full(w.shape, float(sys.group_order))
        return _finish(values, None, ctl, "generalized Bessel")
    with np.errstate(over="ignore"):
        scale = bessel_constant(sys) * np.exp(log_scale)
        values = np.where(w > 0, scale * acc.total, sys.group_order)
    return _finish(
        values, acc, ctl, "generalized Bessel", float(np.max(scale))
    )


def generalized_bessel(sys, x, y, control=None) -> DensityValue:
    """W-invariant generalized Bessel function D_k^W(x, y); D(0, y) = |W|."""
    dunkl.dihedral.check_point(sys, y)
    return generalized_bessel_grid(sys, x, y.r, y.theta, control)


def density_from_bessel(sys, t, x, y, control=None) -> DensityValue:
    """Transition density rebuilt from the generalized Bessel function.

    p_t(x, y) = r omega_k(y)**2 exp(-(|x|^2 + |y|^2)/2t)
                D(x/sqrt(t), y/sqrt(t)) / (c_k c_{p,k} 2**gamma t**(gamma+1)).

    The Gaussian factor and the growth of D are combined on the log scale.
    For odd n the density is over the folded angle, like
    transition_density.
    """
    ctl = dunkl.series.resolve(control)
    _check_time(t)
    dunkl.dihedral.check_point(sys, y)
    scale = math.sqrt(t)
    w, log_scale, acc = _bessel_series(
        sys,
        dunkl.dihedral.PolarPoint(x.r / scale, x.theta),
        y.r / scale,
        y.theta,
        ctl,
    )
    theta = float(dunkl.dihedral.fold(sys, y.theta))
    weight_sq = float(dunkl.dihedral.weight_values(sys, y.r, theta)) ** 2
    log_front = (
        -(x.r**2 + y.r**2) / (2 * t)
        - math.log(normalizing_constant(sys))
        - sys.gamma * math.log(2.0)
        - (sys.gamma + 1) * math.log(t)
    )
    if acc is None:
        kernel = sys.group_order / bessel_constant(sys)
        value = y.r * weight_sq * math.exp(log_front) * kernel
        return _finish(value, None, ctl, "density from Bessel")
    # c_{p,k} in D cancels against the 1/c_{p,k} of the prefactor.
    front = y.r * weight_sq * math.exp(log_front + float(log_scale))
    return _finish(
        front * float(acc.total), acc, ctl, "density from Bessel", front
    )


def radial_limit(sys, t: float, rho: float) -> float:
    """Radius beyond which the radial law has negligible mass."""
    return rho + math.sqrt(t) * (
        _RADIAL_TAIL_BASE + 2 * math.sqrt(2 * sys.gamma + 2)
    )


def chamber_mass(
    grid_kernel: Callable,
    sys: dunkl.dihedral.DihedralSystem,
    t: float,
    x: dunkl.dihedral.PolarPoint,
    control: SeriesControl | None = None,
    span: float | None = None,
    r_panels: int = 8,
    r_order: int = 24,
    theta_order: int = 96,
) -> float:
    """Integrate grid_kernel(sys, t, x, r, theta, control) over a sector.

    The angular range is [0, span] (the angular domain by default); the
    radial range is cut where the Gaussian tail drops below 1e-16 and is
    covered by composite Gauss-Legendre panels.
    For odd n the default span is the folded domain [0, pi/(2n)]; pass
    span=sys.chamber_angle to integrate over the whole chamber instead.
    """
    span = sys.angular_span if span is None else span
    r_max = radial_limit(sys, t, x.r)
    edges = np.linspace(0.0, r_max, r_panels + 1)
    r_nodes, r_weights = [], []
    for lower, upper in zip(edges[:-1], edges[1:]):
        nodes, weights = dunkl.specfun.gauss_legendre(
            r_order, float(lower), float(upper)
        )
        r_nodes.append(nodes)
        r_weights.append(weights)
    r_nodes = np.concatenate(r_nodes)
    r_weights = np.concatenate(r_weights)
    theta_nodes, theta_weights = dunkl.specfun.gauss_legendre(
        theta_order, 0.0, span
    )
    values = grid_kernel(
        sys, t, x, r_nodes[:, None], theta_nodes[None, :], control
    ).value
    return float(r_weights @ values @ theta_weights)


def radial_cdf(gamma_idx: float, t: float, rho: float, points: int = 4001):
    """Tabulated CDF of the Bessel transition law from rho.

    Returns:
        A pair (r_grid, cdf) suitable for numpy.interp.
    """
    r_max = rho + math.sqrt(t) * (
        _RADIAL_TAIL_BASE + 2 * math.sqrt(2 * gamma_idx + 2)
    )
    grid = np.linspace(0.0, r_max, points)
    density = bessel_semigroup(gamma_idx, t, rho, grid)
    cdf = scipy.integrate.cumulative_trapezoid(density, grid, initial=0.0)
    return grid, np.clip(cdf / cdf[-1], 0.0, 1.0)
