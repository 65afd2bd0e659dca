"""Tail distribution of the first hitting time T0 of the chamber boundary.

Through the skew product, {T0 > t} = {T_J > p**2 A_t}: the Jacobi process
J = cos(p theta)**2 must not have left (0, 1) by the additive clock. Each
series below mixes a Jacobi exit tail with the Laplace transform of A_t
under a Bessel law, which has the closed form of clock_moment.

Conventions: x = rho**2 / (2t), z = cos(p phi)**2 and P_j is orthonormal.
"""

from __future__ import annotations

import dataclasses
import logging
import math

import numpy as np
import scipy.special

import dunkl.dihedral
import dunkl.errors
import dunkl.series
import dunkl.simulate
import dunkl.specfun

logger = logging.getLogger(__name__)

# Composite Gauss-Legendre rule for the radial mixtures.
_RADIAL_PANELS = 16
_RADIAL_ORDER = 32


@dataclasses.dataclass(frozen=True)
class GirsanovParams:
    """Exponents of the change of measure between two Jacobi laws."""

    kappa: float
    beta: float
    u: float
    v: float
    c: float


@dataclasses.dataclass(frozen=True)
class TailCurve:
    """P(T0 > t) over a time grid.

    Attributes:
        t_grid: Increasing times.
        values: Tail values in [0, 1].
        method: "series" or "mc".
        meta: Truncation or sample-size details.
    """

    t_grid: np.ndarray
    values: np.ndarray
    method: str
    meta: dict = dataclasses.field(default_factory=dict)


def girsanov_params(d1: float, d1p: float, d2: float, d2p: float):
    """Exponents relating Jacobi laws of dimensions (d1, d1') and (d2, d2')."""
    for name, value in (("d1", d1), ("d1p", d1p), ("d2", d2), ("d2p", d2p)):
        if not value > 0:
            raise dunkl.errors.DomainError(f"{name} must be positive: {value}")
    total_one = d1 + d1p
    total_two = d2 + d2p
    return GirsanovParams(
        kappa=(d1 - d2) / 4,
        beta=(d1p - d2p) / 4,
        u=(d1 - d2) / 4 * ((d1 + d2) / 2 - 2),
        v=(d1p - d2p) / 4 * ((d1p + d2p) / 2 - 2),
        c=(total_one - total_two) / 4 * (2 - (total_one + total_two) / 2),
    )


def dual_system(sys: dunkl.dihedral.DihedralSystem):
    """The system with multiplicities 1 - k, i.e. indices -l."""
    if sys.k0 > 1 or sys.k1 > 1:
        raise dunkl.errors.RegimeError(
            f"dual needs k <= 1: k0={sys.k0}, k1={sys.k1}"
        )
    return dunkl.dihedral.with_multiplicities(sys, 1 - sys.k0, 1 - sys.k1)


def clock_moment(gamma_idx: float, nu: float, x: float, control=None):
    """E[exp(-(nu**2 - gamma**2) A_t / 2)] under the Bessel law of index gamma.

    With x = rho**2 / (2t) this equals
    x**a Gamma(b - a) / Gamma(nu + 1) 1F1(a; nu + 1; -x),
    a = (nu - gamma) / 2, b = nu + 1. It tends to 1 as x grows.
    """
    ctl = dunkl.series.resolve(control)
    if nu < gamma_idx:
        raise dunkl.errors.DomainError(
            f"need nu >= gamma: nu={nu}, gamma={gamma_idx}"
        )
    a = (nu - gamma_idx) / 2
    if a == 0:
        return 1.0
    if x == 0:
        return 0.0
    log_series, sign = dunkl.specfun.log_hyp1f1(
        a, nu + 1, -x, ctl, max_terms=ctl.hyper_terms
    )
    log_value = (
        a * math.log(x)
        + scipy.special.gammaln(nu + 1 - a)
        - scipy.special.gammaln(nu + 1)
        + log_series
    )
    return sign * math.exp(log_value)


def _walls(sys):
    """The system whose angular span is the whole chamber."""
    return dunkl.dihedral.unfolded(sys)


def _check_start(sys, x: dunkl.dihedral.PolarPoint, t: float) -> None:
    if not t > 0:
        raise dunkl.errors.DomainError(f"time must be positive: {t}")
    dunkl.dihedral.check_point(sys, x)
    if not x.r > 0:
        raise dunkl.errors.DomainError("hitting tails need |x| > 0")


def _case1_regime(walls) -> None:
    if not (0.5 <= walls.k0 <= 1 and 0.5 <= walls.k1 <= 1):
        raise dunkl.errors.RegimeError(
            "case 1 needs 1/2 <= k0, k1 <= 1, got "
            f"k0={walls.k0}, k1={walls.k1}"
        )
    if walls.k0 == walls.k1 == 0.5:
        raise dunkl.errors.RegimeError(
            "k0 = k1 = 1/2: the dual process never hits the boundary"
        )


def _unit_mean(j: int, params) -> float:
    """Integral over [0, 1] of the orthonormal P_j(2s - 1)."""
    order = max(128, j // 2 + 1)
    nodes, weights = dunkl.specfun.gauss_legendre(order, 0.0, 1.0)
    values = dunkl.specfun.jacobi_p(j, params, 2 * nodes - 1, normalized=True)
    return float(np.dot(weights, values))


def _clip(value: float) -> float:
    return float(min(max(value, 0.0), 1.0))


def _case1_sum(walls, phi: float, moment, ctl, label: str):
    """2**(l0+l1+1) z**l1 (1-z)**l0 sum_j p S2(j) P_j(2z-1) moment(j)."""
    params = dunkl.specfun.angular_params(walls)
    z = math.cos(walls.p * phi) ** 2
    poly = dunkl.specfun.iter_jacobi(params, 2 * z - 1)
    acc = dunkl.series.SeriesAccumulator((), ctl, label)
    for j in range(ctl.max_terms):
        term = _unit_mean(j, params) * float(next(poly)) * moment(j)
        if acc.add(term):
            break
    else:
        acc.fail()
    front = (
        2.0 ** (walls.l0 + walls.l1 + 1)
        * z**walls.l1
        * (1 - z) ** walls.l0
    )
    return _clip(front * float(acc.total)), acc.terms_used


def _case1_tail(sys, x, t: float, ctl):
    _check_start(sys, x, t)
    walls = _walls(sys)
    _case1_regime(walls)
    scaled = x.r * x.r / (2 * t)
    dual_gamma = 2 * walls.p - walls.gamma

    def moment(j: int) -> float:
        nu = 2 * j * walls.p + walls.gamma
        return clock_moment(dual_gamma, nu, scaled, ctl)

    return _case1_sum(walls, x.theta, moment, ctl, "case 1 tail")


def tail_series_case1(sys, x, t: float, control=None) -> float:
    """P(T0 > t) for the process of multiplicities 1 - k.

    sys carries the nonnegative indices l = k - 1/2; the process that
    hits is its dual. Odd systems are handled on the whole chamber through
    dihedral.unfolded.
    """
    return _case1_tail(sys, x, t, dunkl.series.resolve(control))[0]


def _wedge_tail(sys, x, t: float, ctl):
    _check_start(sys, x, t)
    walls = _walls(sys)
    if not walls.k0 == walls.k1 == 1:
        raise dunkl.errors.RegimeError(
            f"needs k0 = k1 = 1, got k0={walls.k0}, k1={walls.k1}"
        )
    scaled = x.r * x.r / (2 * t)
    acc = dunkl.series.SeriesAccumulator((), ctl, "wedge tail")
    for m in range(ctl.max_terms):
        order = (2 * m + 1) * walls.p - 0.5
        bessel = scipy.special.ive(order, scaled / 2) + scipy.special.ive(
            order + 1, scaled / 2
        )
        odd = 2 * m + 1
        if acc.add(bessel * math.sin(2 * odd * walls.p * x.theta) / odd):
            break
    else:
        acc.fail()
    value = 2 / math.sqrt(math.pi) * math.sqrt(scaled) * float(acc.total)
    return _clip(value), acc.terms_used


def tail_series_k1(sys, x, t: float, control=None) -> float:
    """Exit tail of Brownian motion from the wedge [0, pi/(2p)].

    The k = 1 specialization of tail_series_case1: the dual process has
    k = 0. Written with Bessel orders d_m = (2m + 1) p - 1/2.
    """
    return _wedge_tail(sys, x, t, dunkl.series.resolve(control))[0]


def case2_index(sys, j: int) -> float:
    """Bessel index sqrt(gamma**2 - 2 p**2 (lambda_j - c)) of the case 2 sum.

    lambda_j = -2j(j + k0 + 1 - k1) and c = d'(2 - d)/2 with d = 2 k1 + 1,
    d' = 2 k0 + 1. The radicand is the square p**2 (2j + k0 + 1 - k1)**2.
    """
    dim, dim_prime = 2 * sys.k1 + 1, 2 * sys.k0 + 1
    c = girsanov_params(dim, dim_prime, 4 - dim, dim_prime).c
    eigenvalue = -2.0 * j * (j + sys.k0 + 1 - sys.k1)
    radicand = sys.gamma**2 - 2 * sys.p**2 * (eigenvalue - c)
    if radicand < 0:
        raise dunkl.errors.DomainError(f"negative Bessel radicand {radicand}")
    return math.sqrt(radicand)


def _case2_tail(sys, x, t: float, ctl):
    _check_start(sys, x, t)
    walls = _walls(sys)
    phi = x.theta
    if walls.k0 < 0.5 <= walls.k1:
        walls = dunkl.dihedral.with_multiplicities(walls, walls.k1, walls.k0)
        phi = walls.angular_span - phi
    if not walls.k1 < 0.5 <= walls.k0:
        raise dunkl.errors.RegimeError(
            "case 2 needs exactly one multiplicity below 1/2, got "
            f"k0={sys.k0}, k1={sys.k1}"
        )
    scaled = x.r * x.r / (2 * t)
    params = dunkl.specfun.PolyParams(walls.l0, -walls.l1)
    z = math.cos(walls.p * phi) ** 2
    poly = dunkl.specfun.iter_jacobi(params, 2 * z - 1)
    acc = dunkl.series.SeriesAccumulator((), ctl, "case 2 tail")
    for j in range(ctl.max_terms):
        coefficient = dunkl.specfun.f_integral(j, walls, normalized=True)
        moment = clock_moment(
            walls.gamma, case2_index(walls, j), scaled, ctl
        )
        if acc.add(float(next(poly)) * coefficient * moment):
            break
    else:
        acc.fail()
    front = 2.0 ** (walls.l0 - walls.l1 + 1) * z ** (-walls.l1)
    return _clip(front * float(acc.total)), acc.terms_used


def tail_series_case2(sys, x, t: float, control=None) -> float:
    """P(T0 > t) when exactly one multiplicity is below 1/2.

    For k1 < 1/2 <= k0 the tail is
    2**(l0 - l1 + 1) z**(-l1) sum_j P_j(2z - 1) F(j) M_j, with P_j of
    exponents (l0, -l1), F(j) from specfun.f_integral and M_j the clock
    moment of index gamma at case2_index. The mirror regime swaps k0 and
    k1 and reflects the angle across the bisector.
    """
    return _case2_tail(sys, x, t, dunkl.series.resolve(control))[0]


def jacobi_exit_tail(k0: float, k1: float, z: float, t: float, control=None):
    """P(T > t) for the Jacobi process of indices (-l1, -l0) started at z.

    Equal to E[exp(-ct) (z/J_t)**l1 ((1-z)/(1-J_t))**l0] under indices
    (l1, l0), c = 2(l0 + l1), evaluated against the spectral density of J.
    """
    ctl = dunkl.series.resolve(control)
    l0, l1 = k0 - 0.5, k1 - 0.5
    if not (0 <= l0 < 1 and 0 <= l1 < 1):
        raise dunkl.errors.DomainError(
            f"needs 0 <= l0, l1 < 1: l0={l0}, l1={l1}"
        )
    if not 0 < z < 1:
        raise dunkl.errors.DomainError(f"z must lie in (0, 1): {z}")
    if not t > 0:
        raise dunkl.errors.DomainError(f"time must be positive: {t}")
    params = dunkl.specfun.PolyParams(l0, l1)
    poly = dunkl.specfun.iter_jacobi(params, 2 * z - 1)
    acc = dunkl.series.SeriesAccumulator((), ctl, "Jacobi exit tail")
    for j in range(ctl.max_terms):
        decay = math.exp(-2.0 * j * (j + k0 + k1) * t)
        if acc.add(decay * float(next(poly)) * _unit_mean(j, params)):
            break
    else:
        acc.fail()
    front = (
        math.exp(-2 * (l0 + l1) * t)
        * 2.0 ** (l0 + l1 + 1)
        * z**l1
        * (1 - z) ** l0
    )
    return _clip(front * float(acc.total))


def _radial_rule(gamma_idx: float, t: float, rho: float):
    r_max = rho + math.sqrt(t) * (10.0 + 2 * math.sqrt(2 * gamma_idx + 2))
    edges = np.linspace(0.0, r_max, _RADIAL_PANELS + 1)
    nodes, weights = [], []
    for lower, upper in zip(edges[:-1], edges[1:]):
        panel = dunkl.specfun.gauss_legendre(
            _RADIAL_ORDER, float(lower), float(upper)
        )
        nodes.append(panel[0])
        weights.append(panel[1])
    return np.concatenate(nodes), np.concatenate(weights)


def tail_second_approach(sys, x, t: float, control=None) -> float:
    """tail_series_case1 rebuilt by radial quadrature.

    Each clock moment is the integral of the Bessel density of index
    gamma' = 2p - gamma times the conditional Laplace transform
    I_nu(rho r / t) / I_gamma'(rho r / t), instead of its closed form.
    """
    ctl = dunkl.series.resolve(control)
    _check_start(sys, x, t)
    walls = _walls(sys)
    _case1_regime(walls)
    dual_gamma = 2 * walls.p - walls.gamma
    nodes, weights = _radial_rule(dual_gamma, t, x.r)
    # q_t with the Bessel factor of index gamma' divided out.
    base = (
        np.power(nodes / x.r, dual_gamma)
        * nodes
        * np.exp(-((x.r - nodes) ** 2) / (2 * t))
        / t
    )

    def moment(j: int) -> float:
        nu = 2 * j * walls.p + walls.gamma
        ratio = scipy.special.ive(nu, x.r * nodes / t)
        return float(np.dot(weights, base * ratio))

    return _case1_sum(walls, x.theta, moment, ctl, "second approach")[0]


def hitting_case(sys: dunkl.dihedral.DihedralSystem) -> str:
    """Which tail formula covers the process with multiplicities sys.

    Returns one of "wedge", "case1", "case2", "case2-mirror" or "none".
    """
    walls = _walls(sys)
    if walls.k0 >= 0.5 and walls.k1 >= 0.5:
        return "none"
    if walls.k0 <= 0.5 and walls.k1 <= 0.5:
        return "wedge" if walls.k0 == walls.k1 == 0 else "case1"
    return "case2" if walls.k1 < 0.5 else "case2-mirror"


def _process_tail(sys, x, t: float, ctl):
    case = hitting_case(sys)
    if case == "none":
        raise dunkl.errors.RegimeError(
            f"k0={sys.k0}, k1={sys.k1}: T0 is infinite almost surely"
        )
    if case == "wedge":
        return _wedge_tail(dual_system(_walls(sys)), x, t, ctl)
    if case == "case1":
        return _case1_tail(dual_system(_walls(sys)), x, t, ctl)
    return _case2_tail(sys, x, t, ctl)


def tail_for_process(sys, x, t: float, control=None) -> float:
    """P(T0 > t) for the process whose multiplicities are sys.

    Raises:
        RegimeError: When both multiplicities are >= 1/2 (T0 = inf a.s.).
    """
    return _process_tail(sys, x, t, dunkl.series.resolve(control))[0]


def tail_curve(sys, x, t_grid, control=None) -> TailCurve:
    """Series tail of the process with multiplicities sys over t_grid."""
    grid = np.asarray(t_grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) <= 0):
        raise dunkl.errors.DomainError("t_grid must be strictly increasing")
    ctl = dunkl.series.resolve(control)
    results = [_process_tail(sys, x, float(t), ctl) for t in grid]
    values = np.array([value for value, _ in results])
    if np.any(np.diff(values) > 1e-8):
        logger.warning("series tail not monotone on the requested grid")
    return TailCurve(
        t_grid=grid,
        values=values,
        method="series",
        meta={
            "case": hitting_case(sys),
            "terms": [terms for _, terms in results],
        },
    )


def empirical_tail(sample: dunkl.simulate.HittingSample, t_grid) -> TailCurve:
    """Fraction of paths with T0 > t; censored paths count as survivors."""
    grid = np.asarray(t_grid, dtype=float)
    horizon = sample.meta.get("t_max", math.inf)
    if np.any(grid > horizon):
        raise dunkl.errors.DomainError(
            f"t_grid extends past the censoring horizon {horizon}"
        )
    survived = (sample.times[None, :] > grid[:, None]) | sample.censored
    return TailCurve(
        t_grid=grid,
        values=survived.mean(axis=1),
        method="mc",
        meta={
            "paths": int(sample.times.size),
            "censored": int(np.count_nonzero(sample.censored)),
        },
    )
