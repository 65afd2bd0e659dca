"""Unit tests for W-invariant generalized Hermite polynomials."""

import math
import pathlib
import sys

import numpy as np
import pytest
import scipy.special
import yaml  # type: ignore[import-untyped]

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import dunkl.dihedral
import dunkl.errors
import dunkl.hermite
import dunkl.series
import dunkl.specfun

Point = dunkl.dihedral.PolarPoint
Index = dunkl.hermite.HermiteIndex


@pytest.fixture
def fixtures():
    """Load test fixtures from YAML file."""
    fixture_path = pathlib.Path(__file__).parent / "fixtures"
    with open(fixture_path / "dunkl_fixtures.yaml", encoding="utf-8") as f:
        return yaml.safe_load(f)


def test_hermite_values_at_origin(fixtures):
    """Test H_(2q, 0)(0) against hand-computed values."""
    entry = fixtures["hermite_origin"]
    system = dunkl.dihedral.make_system(entry["n"], entry["k0"], entry["k1"])
    for case in entry["values"]:
        result = dunkl.hermite.hermite_w(
            system, Index(case["q"], 0), Point(0.0, 0.0)
        )
        assert result == pytest.approx(case["expected"], rel=1e-12), (
            f"q={case['q']}: Expected {case['expected']}, got {result}"
        )


def test_hermite_index_validation():
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    assert Index(1, 2).degree(system) == 2 + 8
    with pytest.raises(dunkl.errors.DomainError):
        Index(-1, 0)


def test_hermite_polynomials_are_orthonormal():
    """Test orthonormality under the Gaussian-weighted chamber measure.

    In X = rho**2 / 2 and x = cos(2 p phi) the measure is
    X**gamma exp(-X) dX (1 - x)**l0 (1 + x)**l1 dx.
    """
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    indices = [Index(0, 0), Index(1, 0), Index(0, 1), Index(2, 1), Index(1, 2)]
    radial_nodes, radial_weights = scipy.special.roots_genlaguerre(
        40, system.gamma
    )
    params = dunkl.specfun.angular_params(system)
    angle_nodes, angle_weights = dunkl.specfun.gauss_jacobi(
        40, params.a, params.b
    )
    values = np.empty((len(indices), radial_nodes.size, angle_nodes.size))
    for i, idx in enumerate(indices):
        for a, big_x in enumerate(radial_nodes):
            for b, small_x in enumerate(angle_nodes):
                point = Point(
                    math.sqrt(2 * big_x), math.acos(small_x) / (2 * system.p)
                )
                values[i, a, b] = dunkl.hermite.hermite_w(system, idx, point)
    weights = radial_weights[:, None] * angle_weights[None, :]
    gram = np.einsum("iab,jab,ab->ij", values, values, weights)
    assert np.allclose(gram, np.eye(len(indices)), atol=1e-9)


def test_radial_coefficients_rebuild_polynomial():
    """Test that the monomial coefficients reproduce hermite_w."""
    system = dunkl.dihedral.make_system(6, 1.0, 0.5)
    point = Point(1.3, 0.2)
    for idx in (Index(0, 1), Index(3, 0), Index(2, 2)):
        coefficients = dunkl.hermite.radial_coefficients(system, idx)
        powers = 2 * idx.j * system.p + 2 * np.arange(idx.q + 1)
        radial = float(np.dot(coefficients, point.r**powers))
        angular = dunkl.hermite.w_invariant_harmonic(
            system, idx.j, Point(1.0, point.theta)
        )
        expected = dunkl.hermite.hermite_w(system, idx, point)
        assert radial * angular == pytest.approx(expected, rel=1e-10)


def test_heat_image_of_harmonics():
    """Test that exp(-Delta/2) fixes harmonics and maps to Hermite form."""
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    point = Point(0.9, 0.3)
    for j in range(3):
        assert dunkl.hermite.heat_image(system, 0, j, point) == pytest.approx(
            dunkl.hermite.w_invariant_harmonic(system, j, point)
        )
    # (-2)**q q! 2**(jp) / norm times H equals the heat image.
    q, j = 2, 1
    alpha = 2 * j * system.p + system.gamma
    norm = math.sqrt(math.factorial(q) / math.gamma(alpha + q + 1))
    expected = (
        (-2.0) ** q
        * math.factorial(q)
        * 2 ** (j * system.p)
        / norm
        * dunkl.hermite.hermite_w(system, Index(q, j), point)
    )
    assert dunkl.hermite.heat_image(system, q, j, point) == pytest.approx(
        expected, rel=1e-10
    )


def test_mehler_identity_residual():
    """Test the Mehler generating identity for even and odd systems."""
    pairs = [
        (Point(0.8, 0.15), Point(1.1, 0.35)),
        (Point(0.5, 0.3), Point(0.9, 0.1)),
    ]
    for system in (
        dunkl.dihedral.make_system(4, 1.0, 0.5),
        dunkl.dihedral.make_system(3, 0.7),
    ):
        for x, y in pairs:
            residual = dunkl.hermite.mehler_check(system, x, y, 0.3)
            assert residual < 1e-8, f"{system.descriptor()}: {residual}"


def test_mehler_sum_reports_truncation():
    """Test that a too-small degree cutoff is reported, not hidden."""
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    control = dunkl.series.SeriesControl(degree_max=10)
    with pytest.raises(dunkl.errors.NonConvergenceError):
        dunkl.hermite.mehler_sum(
            system, Point(1.0, 0.2), Point(1.2, 0.3), 0.95, control
        )
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.hermite.mehler_sum(
            system, Point(1.0, 0.2), Point(1.2, 0.3), 1.0
        )
