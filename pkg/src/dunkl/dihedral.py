"""The dihedral root system I2(n), its Weyl chamber and polar weight."""

from __future__ import annotations

import dataclasses
import math

import numpy as np

import dunkl.errors

# Slack on the chamber bounds for angles produced by floating arithmetic.
_ANGLE_SLACK = 1e-12


@dataclasses.dataclass(frozen=True)
class DihedralSystem:
    """Dihedral root system with its multiplicity values.

    Odd orders are stored in the even parameterization with k1 = 0 and
    p = n, so every formula downstream has one code path.
    """

    n: int
    p: float
    k0: float
    k1: float

    @property
    def parity(self) -> str:
        return "even" if self.n % 2 == 0 else "odd"

    @property
    def gamma(self) -> float:
        return self.p * (self.k0 + self.k1)

    @property
    def l0(self) -> float:
        return self.k0 - 0.5

    @property
    def l1(self) -> float:
        return self.k1 - 0.5

    @property
    def group_order(self) -> int:
        return 2 * self.n

    @property
    def chamber_angle(self) -> float:
        return math.pi / self.n

    @property
    def angular_span(self) -> float:
        """Upper end of the angular domain [0, pi/(2p)] of the series."""
        return math.pi / (2 * self.p)

    def descriptor(self) -> dict:
        """JSON system descriptor."""
        if self.parity == "odd":
            return {"n": self.n, "k0": self.k0}
        return {"n": self.n, "k0": self.k0, "k1": self.k1}


@dataclasses.dataclass(frozen=True)
class PolarPoint:
    """A point (r, theta) of the closed chamber."""

    r: float
    theta: float

    def __post_init__(self) -> None:
        if self.r < 0:
            raise dunkl.errors.DomainError(f"radius must be >= 0: {self.r}")


def make_system(n: int, k0: float, k1: float | None = None) -> DihedralSystem:
    """Build the canonical system for I2(n).

    Args:
        n: Polygon order, at least 3.
        k0: Multiplicity of the first orbit (the only one for odd n).
        k1: Multiplicity of the second orbit; required for even n and
            rejected for odd n.

    Returns:
        A DihedralSystem.
    """
    if int(n) != n or n < 3:
        raise dunkl.errors.DomainError(f"n must be an integer >= 3: {n}")
    n = int(n)
    if n % 2:
        if k1 is not None:
            raise dunkl.errors.ParityError(
                f"odd n={n} has a single orbit; k1 must be omitted"
            )
        k1, p = 0.0, n
    else:
        if k1 is None:
            raise dunkl.errors.ParityError(f"even n={n} needs both k0 and k1")
        p = n // 2
    if k0 < 0 or k1 < 0:
        raise dunkl.errors.DomainError(
            f"multiplicities must be nonnegative: k0={k0}, k1={k1}"
        )
    return DihedralSystem(n=n, p=p, k0=float(k0), k1=float(k1))


def with_multiplicities(
    sys: DihedralSystem, k0: float, k1: float
) -> DihedralSystem:
    """Return a system on the same group with other multiplicities.

    For odd n the canonical (p, k0, k1) triple is kept even when k1 != 0,
    which is what the hitting formulas need for their dual processes.
    """
    if k0 < 0 or k1 < 0:
        raise dunkl.errors.DomainError(
            f"multiplicities must be nonnegative: k0={k0}, k1={k1}"
        )
    return dataclasses.replace(sys, k0=float(k0), k1=float(k1))


def in_chamber(sys: DihedralSystem, x: PolarPoint) -> bool:
    return -_ANGLE_SLACK <= x.theta <= sys.chamber_angle + _ANGLE_SLACK


def check_point(sys: DihedralSystem, x: PolarPoint) -> None:
    if not in_chamber(sys, x):
        raise dunkl.errors.DomainError(
            f"theta={x.theta} outside the chamber [0, pi/{sys.n}]"
        )


def fold(sys: DihedralSystem, theta):
    """Map chamber angles onto the angular domain [0, pi/(2p)].

    Identity for even n; for odd n reflects across the chamber bisector.
    """
    theta = np.asarray(theta, dtype=float)
    span = sys.angular_span
    folded = np.where(theta > span, 2 * span - theta, theta)
    return np.clip(folded, 0.0, span)


def weight(sys: DihedralSystem, x: PolarPoint) -> float:
    """Polar weight r**gamma sin(p theta)**k0 cos(p theta)**k1."""
    check_point(sys, x)
    return float(weight_values(sys, x.r, x.theta))


def weight_values(sys: DihedralSystem, r, theta):
    """Vectorized weight; the constant factor is 1."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    angle = sys.p * theta
    return (
        np.power(r, sys.gamma)
        * np.power(np.abs(np.sin(angle)), sys.k0)
        * np.power(np.abs(np.cos(angle)), sys.k1)
    )


def group_elements(n: int) -> list[np.ndarray]:
    """The 2n orthogonal matrices of the dihedral group of order 2n.

    Rotations by 2 pi m / n come first, then reflections across the lines
    through the origin at angle pi m / n.
    """
    elements = []
    for m in range(n):
        angle = 2 * math.pi * m / n
        c, s = math.cos(angle), math.sin(angle)
        elements.append(np.array([[c, -s], [s, c]]))
    for m in range(n):
        angle = 2 * math.pi * m / n
        c, s = math.cos(angle), math.sin(angle)
        elements.append(np.array([[c, s], [s, -c]]))
    return elements


def to_cartesian(r, theta) -> np.ndarray:
    """Stack (r cos theta, r sin theta) along a trailing axis."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)


def from_cartesian(points) -> tuple[np.ndarray, np.ndarray]:
    points = np.asarray(points, dtype=float)
    r = np.hypot(points[..., 0], points[..., 1])
    theta = np.arctan2(points[..., 1], points[..., 0])
    return r, theta


def unfolded(sys: DihedralSystem) -> DihedralSystem:
    """Write a system on the whole chamber [0, pi/n].

    Even systems are returned unchanged. An odd system with multiplicity k
    has weight sin(n theta)**k = (2 sin(p theta) cos(p theta))**k for
    p = n/2, so it is rewritten with p = n/2 and k0 = k1 = k. The angular
    span then equals the chamber angle, which is what hitting-time
    formulas need since both chamber walls belong to one orbit.
    """
    if sys.parity == "even":
        return sys
    return DihedralSystem(n=sys.n, p=sys.n / 2, k0=sys.k0, k1=sys.k0)
