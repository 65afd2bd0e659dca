"""Special functions and orthogonal polynomials.

Polynomials are evaluated by three-term recurrence and accept numpy arrays
for the argument. Hypergeometric sums run in log space so that the large
arguments met by the hitting-time series neither overflow nor underflow.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from typing import Callable, Iterator

import numpy as np
import scipy.special

import dunkl.dihedral
import dunkl.errors
import dunkl.series

# Gauss-Legendre order used for the S2 integrals on [0, 1].
_S2_ORDER = 128

# Slack on |x| <= 1 for arguments produced by cos() round-off.
_UNIT_SLACK = 1e-12

# Block size when growing a hypergeometric sum.
_SERIES_CHUNK = 256


@dataclasses.dataclass(frozen=True)
class PolyParams:
    """Jacobi exponents for the weight (1 - x)**a * (1 + x)**b."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (self.a > -1 and self.b > -1):
            raise dunkl.errors.DomainError(
                f"Jacobi exponents must exceed -1: a={self.a}, b={self.b}"
            )


def ln_gamma(x):
    """Return log Gamma(x) for x > 0."""
    values = np.asarray(x, dtype=float)
    if np.any(values <= 0):
        raise dunkl.errors.DomainError(f"ln_gamma needs x > 0: {x}")
    result = scipy.special.gammaln(values)
    return float(result) if result.ndim == 0 else result


def _check_bessel_args(nu, z) -> None:
    if np.any(np.asarray(nu) < 0):
        raise dunkl.errors.DomainError(f"Bessel order must be >= 0: {nu}")
    if np.any(np.asarray(z) < 0):
        raise dunkl.errors.DomainError(f"Bessel argument must be >= 0: {z}")


def bessel_i(nu, z):
    """Modified Bessel function I_nu(z).

    Raises:
        OverflowError: When the value is not representable; use
            bessel_i_scaled instead.
    """
    _check_bessel_args(nu, z)
    result = scipy.special.iv(nu, z)
    if not np.all(np.isfinite(result)):
        raise OverflowError(f"I_{nu}({z}) overflows; use bessel_i_scaled")
    return float(result) if np.ndim(result) == 0 else result


def bessel_i_scaled(nu, z):
    """Exponentially scaled Bessel function exp(-z) * I_nu(z)."""
    _check_bessel_args(nu, z)
    result = scipy.special.ive(nu, z)
    return float(result) if np.ndim(result) == 0 else result


def _log_pfq(upper, lower, z: float, max_terms: int, control) -> tuple:
    """Sum prod (a)_q / prod (b)_q * z**q / q! in log space.

    Returns:
        A pair (log |sum|, sign of sum).
    """
    count = min(_SERIES_CHUNK, max_terms)
    while True:
        q = np.arange(count - 1, dtype=float)
        ratio = np.full(count - 1, z, dtype=float) / (q + 1.0)
        for a in upper:
            ratio = ratio * (a + q)
        for b in lower:
            ratio = ratio / (b + q)
        with np.errstate(divide="ignore"):
            steps = np.log(np.abs(ratio))
        log_terms = np.concatenate(([0.0], np.cumsum(steps)))
        signs = np.concatenate(([1.0], np.cumprod(np.sign(ratio))))
        peak = np.max(log_terms)
        scaled = np.exp(log_terms - peak)
        partial = np.cumsum(signs * scaled)
        small = scaled <= control.tol * np.abs(partial)
        run = control.consecutive_small
        hits = np.flatnonzero(
            np.convolve(small.astype(int), np.ones(run, dtype=int), "valid")
            == run
        )
        if hits.size:
            total = partial[hits[0] + run - 1]
            if total == 0:
                return -math.inf, 0.0
            return math.log(abs(total)) + peak, math.copysign(1.0, total)
        if count >= max_terms:
            raise dunkl.errors.NonConvergenceError(
                f"hypergeometric series at z={z} needs more than "
                f"{max_terms} terms",
                terms_used=count,
            )
        count = min(2 * count, max_terms)


def _check_lower(b: float) -> None:
    if b <= 0 and float(b).is_integer():
        raise dunkl.errors.DomainError(
            f"lower parameter may not be a nonpositive integer: {b}"
        )


def hyp0f1(b: float, z: float, control=None) -> float:
    """Confluent limit function 0F1(; b; z)."""
    ctl = dunkl.series.resolve(control)
    _check_lower(b)
    log_value, sign = _log_pfq((), (b,), z, ctl.max_terms, ctl)
    return sign * math.exp(log_value)


def log_hyp1f1(
    a: float, b: float, z: float, control=None, max_terms: int | None = None
) -> tuple[float, float]:
    """Return (log |1F1(a; b; z)|, sign).

    Negative arguments go through Kummer's transformation
    1F1(a; b; z) = exp(z) 1F1(b - a; b; -z), so the summed series never
    alternates because of z.
    """
    ctl = dunkl.series.resolve(control)
    _check_lower(b)
    budget = ctl.max_terms if max_terms is None else max_terms
    if z < 0:
        log_value, sign = _log_pfq((b - a,), (b,), -z, budget, ctl)
        return log_value + z, sign
    return _log_pfq((a,), (b,), z, budget, ctl)


def hyp1f1(
    a: float, b: float, z: float, control=None, max_terms: int | None = None
) -> float:
    """Kummer confluent hypergeometric function 1F1(a; b; z)."""
    log_value, sign = log_hyp1f1(a, b, z, control, max_terms)
    if sign == 0:
        return 0.0
    return sign * math.exp(log_value)


def jacobi_log_norm(j, params: PolyParams):
    """Log of the squared L2 norm of P_j under (1-x)**a (1+x)**b."""
    a, b = params.a, params.b
    j = np.asarray(j, dtype=float)
    head = (
        (a + b + 1) * math.log(2.0)
        + scipy.special.gammaln(a + 1)
        + scipy.special.gammaln(b + 1)
        - scipy.special.gammaln(a + b + 2)
    )
    safe = np.maximum(j, 1.0)
    tail = (
        (a + b + 1) * math.log(2.0)
        - np.log(2 * safe + a + b + 1)
        + scipy.special.gammaln(safe + a + 1)
        + scipy.special.gammaln(safe + b + 1)
        - scipy.special.gammaln(safe + a + b + 1)
        - scipy.special.gammaln(safe + 1)
    )
    result = np.where(j == 0, head, tail)
    return float(result) if result.ndim == 0 else result


def _check_unit(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1 + _UNIT_SLACK):
        raise dunkl.errors.DomainError("polynomial argument outside [-1, 1]")
    return np.clip(x, -1.0, 1.0)


def iter_jacobi(
    params: PolyParams, x, normalized: bool = True
) -> Iterator[np.ndarray]:
    """Yield P_0(x), P_1(x), ... without end."""
    a, b = params.a, params.b
    x = _check_unit(x)
    previous = np.ones_like(x)
    current = (a + 1) + (a + b + 2) * (x - 1) / 2
    degree = 0
    while True:
        value = previous if degree == 0 else current
        if normalized:
            value = value * math.exp(-0.5 * jacobi_log_norm(degree, params))
        yield value
        if degree >= 1:
            n = degree
            s = 2 * n + a + b
            following = (
                (s + 1) * ((s + 2) * s * x + a * a - b * b) * current
                - 2 * (n + a) * (n + b) * (s + 2) * previous
            ) / (2 * (n + 1) * (n + a + b + 1) * s)
            previous, current = current, following
        degree += 1


def jacobi_table(degree: int, params: PolyParams, x, normalized=True):
    """Return an array of P_0..P_degree evaluated at x (leading axis j)."""
    values = iter_jacobi(params, x, normalized)
    return np.stack([next(values) for _ in range(degree + 1)])


def jacobi_p(j: int, params: PolyParams, x, normalized: bool = False):
    """Jacobi polynomial P_j^{(a, b)}(x), optionally orthonormalized."""
    if j < 0:
        raise dunkl.errors.DomainError(f"degree must be >= 0: {j}")
    result = jacobi_table(j, params, x, normalized)[j]
    return float(result) if result.ndim == 0 else result


def laguerre_table(degree: int, alpha: float, x):
    """Return L_0^alpha..L_degree^alpha at x (leading axis q)."""
    if alpha <= -1:
        raise dunkl.errors.DomainError(
            f"Laguerre alpha must exceed -1: {alpha}"
        )
    x = np.asarray(x, dtype=float)
    rows = [np.ones_like(x), alpha + 1 - x]
    for n in range(1, degree):
        following = (2 * n + 1 + alpha - x) * rows[n]
        following = following - (n + alpha) * rows[n - 1]
        rows.append(following / (n + 1))
    return np.stack(rows[: degree + 1])


def laguerre_l(q: int, alpha: float, x):
    """Generalized Laguerre polynomial L_q^alpha(x)."""
    if q < 0:
        raise dunkl.errors.DomainError(f"degree must be >= 0: {q}")
    result = laguerre_table(q, alpha, x)[q]
    return float(result) if result.ndim == 0 else result


def _chebyshev(j: int, x, first: Callable):
    x = _check_unit(x)
    previous, current = np.ones_like(x), first(x)
    if j == 0:
        result = previous
    else:
        for _ in range(j - 1):
            previous, current = current, 2 * x * current - previous
        result = current
    return float(result) if result.ndim == 0 else result


def chebyshev_t(j: int, x):
    """Chebyshev polynomial of the first kind."""
    return _chebyshev(j, x, lambda x: x)


def chebyshev_u(j: int, x):
    """Chebyshev polynomial of the second kind."""
    return _chebyshev(j, x, lambda x: 2 * x)


def gegenbauer_constant(j: int, k1: float, k0: float) -> float:
    """Ratio of C_{2j}^{(k1, k0)} to P_j^{(k0 - 1/2, k1 - 1/2)}."""
    rising = scipy.special.poch(k0 + k1, j)
    return float(rising / scipy.special.poch(k1 + 0.5, j))


def gen_gegenbauer(j: int, k1: float, k0: float, x):
    """Generalized Gegenbauer polynomial C_{2j}^{(k1, k0)}(x).

    Evaluated as gegenbauer_constant(j, k1, k0) times the standard Jacobi
    polynomial P_j^{(k0 - 1/2, k1 - 1/2)} at 2x**2 - 1. With k1 = 0 this is
    the classical Gegenbauer polynomial C_{2j}^{k0}.
    """
    x = _check_unit(x)
    params = PolyParams(k0 - 0.5, k1 - 0.5)
    value = gegenbauer_constant(j, k1, k0) * jacobi_p(j, params, 2 * x * x - 1)
    return float(value) if np.ndim(value) == 0 else value


def _read_only(*arrays):
    for array in arrays:
        array.flags.writeable = False
    return arrays


@functools.lru_cache(maxsize=64)
def gauss_legendre(order: int, lower: float = -1.0, upper: float = 1.0):
    """Nodes and weights of the Gauss-Legendre rule on [lower, upper]."""
    nodes, weights = scipy.special.roots_legendre(order)
    half = (upper - lower) / 2
    return _read_only(lower + half * (nodes + 1), half * weights)


@functools.lru_cache(maxsize=64)
def gauss_jacobi(order: int, a: float, b: float):
    """Nodes and weights for the weight (1 - x)**a (1 + x)**b on [-1, 1]."""
    nodes, weights = scipy.special.roots_jacobi(order, a, b)
    return _read_only(nodes, weights)


def angular_params(sys: dunkl.dihedral.DihedralSystem) -> PolyParams:
    """Jacobi exponents of the angular eigenfunctions in cos(2p theta)."""
    return PolyParams(sys.l0, sys.l1)


def s2_integral(j: int, sys: dunkl.dihedral.DihedralSystem) -> float:
    """S2(j) = (1/p) * integral over [0, 1] of the orthonormal P_j(2s - 1)."""
    order = max(_S2_ORDER, j // 2 + 1)
    nodes, weights = gauss_legendre(order, 0.0, 1.0)
    values = jacobi_p(j, angular_params(sys), 2 * nodes - 1, normalized=True)
    return float(np.dot(weights, values)) / sys.p


def f_integral(
    j: int,
    sys: dunkl.dihedral.DihedralSystem,
    normalized: bool = False,
    order: int = 128,
) -> float:
    """F(j) = integral over [0, 1] of (1 - s)**l0 P_j(2s - 1) ds.

    The polynomial has exponents (l0, 1/2 - k1): the angular family of the
    process obtained by lifting the k1 index above zero.

    Raises:
        RegimeError: Unless k1 < 1/2 <= k0.
    """
    if not sys.k1 < 0.5 <= sys.k0:
        raise dunkl.errors.RegimeError(
            f"F(j) needs k1 < 1/2 <= k0, got k0={sys.k0}, k1={sys.k1}"
        )
    params = PolyParams(sys.l0, 0.5 - sys.k1)
    nodes, weights = gauss_jacobi(order, sys.l0, 0.0)
    values = jacobi_p(j, params, nodes, normalized=normalized)
    return float(np.dot(weights, values)) * 2.0 ** (-sys.l0 - 1)
