"""Unit tests for the spectral kernels of the radial Dunkl process."""

import math
import pathlib
import sys

import numpy as np
import pytest
import scipy.integrate

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import dunkl.dihedral
import dunkl.errors
import dunkl.series
import dunkl.specfun
import dunkl.spectral
import dunkl.validate

Point = dunkl.dihedral.PolarPoint


def test_series_accumulator_stopping_rule() -> None:
    """Test that a sum stops after consecutive small terms or fails."""
    control = dunkl.series.SeriesControl(tol=1e-6, max_terms=50)
    acc = dunkl.series.SeriesAccumulator((), control, "geometric")
    for j in range(control.max_terms):
        if acc.add(0.5**j):
            break
    else:
        acc.fail()
    assert float(acc.total) == pytest.approx(2.0, rel=1e-5)
    assert acc.terms_used < 50
    stubborn = dunkl.series.SeriesAccumulator((), control, "harmonic")
    for j in range(5):
        stubborn.add(1.0 / (j + 1))
    with pytest.raises(dunkl.errors.NonConvergenceError) as excinfo:
        stubborn.fail()
    assert excinfo.value.terms_used == 5
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.series.SeriesControl(tol=0.0)


def test_angular_density_is_a_probability() -> None:
    """Test that m_t integrates to 1 over [0, pi/2]."""
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    nodes, weights = dunkl.specfun.gauss_legendre(96, 0.0, math.pi / 2)
    density = dunkl.spectral.angular_density(system, 0.3, 0.4, nodes)
    assert float(np.dot(weights, density.value)) == pytest.approx(1.0, abs=1e-8)
    assert density.terms_used > 1


def test_angular_eigenvalue() -> None:
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    assert dunkl.spectral.angular_eigenvalue(system, 0) == 0.0
    assert dunkl.spectral.angular_eigenvalue(system, 2) == -2 * 2 * 3.5


def test_bessel_semigroup_is_a_probability() -> None:
    """Test that q_t(rho, .) has unit mass, from zero and from rho > 0."""
    for rho in (0.0, 1.0):
        mass, _ = scipy.integrate.quad(
            lambda r: dunkl.spectral.bessel_semigroup(2.0, 0.5, rho, r),
            0.0,
            np.inf,
        )
        assert mass == pytest.approx(1.0, abs=1e-8), f"rho={rho}"


def test_transition_density_is_a_probability() -> None:
    """Test that p_t(x, .) integrates to 1 over the angular domain."""
    cases = [
        (dunkl.dihedral.make_system(4, 1.0, 0.5), Point(1.0, 0.3)),
        (dunkl.dihedral.make_system(6, 1.0, 1.0), Point(0.7, 0.2)),
        (dunkl.dihedral.make_system(3, 1.0), Point(1.0, 0.8)),
        (dunkl.dihedral.make_system(4, 1.0, 1.0), Point(0.0, 0.0)),
    ]
    for system, start in cases:
        mass = dunkl.spectral.chamber_mass(
            dunkl.spectral.transition_density_grid, system, 0.5, start
        )
        assert mass == pytest.approx(1.0, abs=1e-6), system.descriptor()


def test_odd_density_lives_on_the_folded_angle() -> None:
    """Test that an odd system's density has mass 2 over the whole chamber."""
    system = dunkl.dihedral.make_system(3, 0.7)
    start = Point(1.0, 0.8)
    folded = dunkl.spectral.chamber_mass(
        dunkl.spectral.transition_density_grid, system, 0.5, start
    )
    whole = dunkl.spectral.chamber_mass(
        dunkl.spectral.transition_density_grid,
        system,
        0.5,
        start,
        span=system.chamber_angle,
    )
    assert system.angular_span == pytest.approx(math.pi / 6)
    assert folded == pytest.approx(1.0, abs=1e-6)
    assert whole == pytest.approx(2.0, abs=1e-6)


def test_density_from_bessel_matches_series() -> None:
    """Test the generalized Bessel rewriting of the transition density."""
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    start = Point(0.9, 0.2)
    for end in (Point(1.2, 0.5), Point(0.4, 0.1), Point(2.0, 0.7)):
        direct = dunkl.spectral.transition_density(system, 0.6, start, end)
        rebuilt = dunkl.spectral.density_from_bessel(system, 0.6, start, end)
        assert rebuilt.value == pytest.approx(direct.value, rel=1e-9)


def test_density_from_bessel_far_from_origin() -> None:
    """Test the Bessel rewriting where D alone overflows a double."""
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    start, end = Point(30.0, 0.3), Point(30.0, 0.35)
    direct = dunkl.spectral.transition_density(system, 1.0, start, end)
    rebuilt = dunkl.spectral.density_from_bessel(system, 1.0, start, end)
    assert math.isfinite(rebuilt.value)
    assert rebuilt.value > 0.0
    assert rebuilt.value == pytest.approx(direct.value, rel=1e-8)
    from_origin = dunkl.spectral.density_from_bessel(
        system, 1.0, Point(0.0, 0.0), Point(1.0, 0.3)
    )
    assert from_origin.value == pytest.approx(
        dunkl.spectral.transition_density(
            system, 1.0, Point(0.0, 0.0), Point(1.0, 0.3)
        ).value,
        rel=1e-10,
    )


def test_generalized_bessel_at_origin_and_k_zero() -> None:
    """Test D(0, y) = |W| and D = sum over W of exp(<x, w y>) when k = 0."""
    system = dunkl.dihedral.make_system(4, 0.0, 0.0)
    origin = Point(0.0, 0.0)
    y = Point(1.3, 0.4)
    assert dunkl.spectral.generalized_bessel(system, origin, y).value == 8.0
    x = Point(0.8, 0.2)
    xy = dunkl.dihedral.to_cartesian(x.r, x.theta)
    yy = dunkl.dihedral.to_cartesian(y.r, y.theta)
    expected = sum(
        math.exp(float(xy @ (m @ yy)))
        for m in dunkl.dihedral.group_elements(4)
    )
    value = dunkl.spectral.generalized_bessel(system, x, y).value
    assert value == pytest.approx(expected, rel=1e-10)


def test_generalized_bessel_is_continuous_at_origin() -> None:
    system = dunkl.dihedral.make_system(6, 1.0, 0.5)
    value = dunkl.spectral.generalized_bessel(
        system, Point(1e-4, 0.2), Point(1e-4, 0.1)
    ).value
    assert value == pytest.approx(12.0, rel=1e-6)


def test_reflected_and_killed_kernels_match_images() -> None:
    """Test the wedge series against Gaussian image sums."""
    for n in (3, 4, 6):
        system = (
            dunkl.dihedral.make_system(n, 0.0)
            if n % 2
            else dunkl.dihedral.make_system(n, 0.0, 0.0)
        )
        x = Point(0.8, 0.3 * system.chamber_angle)
        y = Point(1.1, 0.6 * system.chamber_angle)
        reflected = dunkl.spectral.reflected_kernel(system, 0.4, x, y).value
        killed = dunkl.spectral.killed_kernel(system, 0.4, x, y).value
        assert reflected == pytest.approx(
            dunkl.validate.image_sum(n, 0.4, x, y, signed=False), abs=1e-10
        )
        assert killed == pytest.approx(
            dunkl.validate.image_sum(n, 0.4, x, y, signed=True), abs=1e-10
        )


def test_reflected_kernel_needs_zero_multiplicity() -> None:
    system = dunkl.dihedral.make_system(4, 1.0, 0.0)
    with pytest.raises(dunkl.errors.RegimeError):
        dunkl.spectral.reflected_kernel(
            system, 0.4, Point(1.0, 0.3), Point(1.0, 0.4)
        )


def test_conditioned_kernel_forms_agree() -> None:
    """Test that the sine and Chebyshev forms give the same kernel."""
    for system in (
        dunkl.dihedral.make_system(4, 1.0, 1.0),
        dunkl.dihedral.make_system(3, 1.0),
    ):
        x = Point(0.9, 0.4 * system.chamber_angle)
        for y in (Point(1.2, 0.3), Point(0.5, 0.1)):
            sine = dunkl.spectral.conditioned_kernel(system, 0.5, x, y)
            chebyshev = dunkl.spectral.conditioned_kernel(
                system, 0.5, x, y, form="chebyshev"
            )
            assert chebyshev.value == pytest.approx(sine.value, rel=1e-9)


def test_conditioned_kernel_is_conservative() -> None:
    """Test that the conditioned kernel has unit mass over the chamber."""
    system = dunkl.dihedral.make_system(4, 1.0, 1.0)
    start = Point(1.0, 0.3)
    mass = dunkl.spectral.chamber_mass(
        dunkl.spectral.conditioned_kernel_grid,
        system,
        0.5,
        start,
        span=system.chamber_angle,
    )
    assert mass == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.spectral.conditioned_kernel(
            system, 0.5, Point(1.0, 0.0), start
        )


def test_killed_mass_decreases_in_time() -> None:
    system = dunkl.dihedral.make_system(4, 0.0, 0.0)
    start = Point(1.0, 0.4)
    masses = [
        dunkl.spectral.chamber_mass(
            dunkl.spectral.killed_kernel_grid,
            system,
            t,
            start,
            span=system.chamber_angle,
        )
        for t in (0.2, 0.5, 1.0)
    ]
    assert 1.0 > masses[0] > masses[1] > masses[2] > 0.0


def test_conditional_laplace_of_trivial_mode() -> None:
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    assert dunkl.spectral.conditional_laplace(
        system, 0, 0.5, 1.0, 1.2
    ) == pytest.approx(1.0)
    assert 0.0 < dunkl.spectral.conditional_laplace(
        system, 2, 0.5, 1.0, 1.2
    ) < 1.0


def test_radial_cdf_is_a_distribution_function() -> None:
    grid, cdf = dunkl.spectral.radial_cdf(3.0, 0.5, 1.0)
    assert cdf[0] == 0.0
    assert cdf[-1] == pytest.approx(1.0)
    assert np.all(np.diff(cdf) >= 0)
    assert grid.size == cdf.size


def test_density_rejects_bad_inputs() -> None:
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.spectral.transition_density(
            system, 0.0, Point(1.0, 0.3), Point(1.0, 0.3)
        )
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.spectral.transition_density(
            system, 0.5, Point(1.0, 1.0), Point(1.0, 0.3)
        )
