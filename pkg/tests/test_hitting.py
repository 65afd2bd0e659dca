"""Unit tests for hitting-time tails of the chamber boundary."""

import math
import pathlib
import sys

import numpy as np
import pytest
import yaml  # type: ignore[import-untyped]

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import dunkl.dihedral
import dunkl.errors
import dunkl.hitting
import dunkl.simulate

Point = dunkl.dihedral.PolarPoint


@pytest.fixture
def fixtures():
    """Load test fixtures from YAML file."""
    fixture_path = pathlib.Path(__file__).parent / "fixtures"
    with open(fixture_path / "dunkl_fixtures.yaml", encoding="utf-8") as f:
        return yaml.safe_load(f)


def _system(entry):
    return dunkl.dihedral.make_system(entry["n"], entry["k0"], entry.get("k1"))


def test_girsanov_params(fixtures):
    """Test change-of-measure exponents against worked values."""
    for entry in fixtures["girsanov"]:
        params = dunkl.hitting.girsanov_params(*entry["dims"])
        for field in ("kappa", "beta", "u", "v", "c"):
            assert getattr(params, field) == pytest.approx(entry[field]), (
                f"{entry['name']}: {field}"
            )
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.hitting.girsanov_params(0.0, 1.0, 1.0, 1.0)


def test_case2_index_is_exact(fixtures):
    """Test that the case 2 Bessel index is p(2j + k0 + 1 - k1)."""
    entry = fixtures["case2_index"]
    system = _system(entry)
    for j, expected in enumerate(entry["expected"]):
        assert dunkl.hitting.case2_index(system, j) == pytest.approx(expected)


def test_hitting_case_dispatch(fixtures):
    """Test which formula covers each multiplicity pair."""
    for entry in fixtures["hitting_cases"]:
        case = dunkl.hitting.hitting_case(_system(entry))
        assert case == entry["expected"], entry


def test_clock_moment_limits():
    """Test clock moments: trivial index, zero radius and large radius."""
    assert dunkl.hitting.clock_moment(2.0, 2.0, 3.0) == 1.0
    assert dunkl.hitting.clock_moment(2.0, 4.0, 0.0) == 0.0
    assert dunkl.hitting.clock_moment(1.0, 3.0, 1000.0) == pytest.approx(
        1.0, abs=1e-2
    )
    values = [dunkl.hitting.clock_moment(1.0, 3.0, x) for x in (0.5, 1, 2, 4)]
    assert all(0.0 < value < 1.0 for value in values)
    assert values == sorted(values)
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.hitting.clock_moment(3.0, 1.0, 1.0)


def test_wedge_formula_matches_case1_at_k_one():
    """Test that the k = 1 specialization agrees with the general series."""
    system = dunkl.dihedral.make_system(4, 1.0, 1.0)
    start = Point(1.0, math.pi / 16)
    for t in (0.2, 1.0, 3.0):
        general = dunkl.hitting.tail_series_case1(system, start, t)
        wedge = dunkl.hitting.tail_series_k1(system, start, t)
        assert general == pytest.approx(wedge, abs=1e-8), f"t={t}"


def test_second_approach_matches_closed_moments():
    """Test the radial-quadrature route against the closed-form moments."""
    system = dunkl.dihedral.make_system(4, 0.75, 0.75)
    start = Point(1.0, math.pi / 16)
    for t in (0.3, 1.0):
        closed = dunkl.hitting.tail_series_case1(system, start, t)
        quadrature = dunkl.hitting.tail_second_approach(system, start, t)
        assert quadrature == pytest.approx(closed, abs=1e-6), f"t={t}"


def test_tails_start_at_one_and_decrease():
    """Test that tails are near 1 at small t and decrease on a grid."""
    start = Point(1.0, math.pi / 8)
    grid = np.array([0.01, 0.2, 0.5, 1.0, 2.0])
    for k0, k1 in ((0.25, 0.25), (0.75, 0.25), (0.0, 0.0)):
        system = dunkl.dihedral.make_system(4, k0, k1)
        curve = dunkl.hitting.tail_curve(system, start, grid)
        assert curve.values[0] == pytest.approx(1.0, abs=1e-3), (k0, k1)
        assert np.all(np.diff(curve.values) <= 1e-10), (k0, k1)
        assert np.all((curve.values >= 0) & (curve.values <= 1))
        assert len(curve.meta["terms"]) == grid.size


def test_mirror_case_reflects_the_angle():
    """Test that swapping k0 and k1 mirrors the start across the bisector."""
    start = Point(1.0, 0.2)
    mirrored = Point(1.0, math.pi / 4 - 0.2)
    low_k1 = dunkl.dihedral.make_system(4, 0.75, 0.25)
    low_k0 = dunkl.dihedral.make_system(4, 0.25, 0.75)
    assert dunkl.hitting.tail_for_process(low_k0, start, 0.7) == (
        pytest.approx(dunkl.hitting.tail_for_process(low_k1, mirrored, 0.7))
    )


def test_brownian_tail_uses_wedge_formula():
    """Test that k = 0 dispatches to the wedge formula of the dual system."""
    start = Point(1.0, 0.3)
    brownian = dunkl.dihedral.make_system(4, 0.0, 0.0)
    dual = dunkl.dihedral.make_system(4, 1.0, 1.0)
    assert dunkl.hitting.tail_for_process(brownian, start, 0.5) == (
        pytest.approx(dunkl.hitting.tail_series_k1(dual, start, 0.5))
    )


def test_odd_systems_use_the_whole_chamber():
    """Test that an odd system has the tail of its unfolded rewriting."""
    odd = dunkl.dihedral.make_system(3, 0.3)
    start = Point(1.0, 0.8)
    value = dunkl.hitting.tail_for_process(odd, start, 0.5)
    unfolded = dunkl.dihedral.unfolded(odd)
    assert value == pytest.approx(
        dunkl.hitting.tail_for_process(unfolded, start, 0.5)
    )
    assert 0.0 < value < 1.0


def test_regime_errors():
    start = Point(1.0, 0.3)
    with pytest.raises(dunkl.errors.RegimeError):
        dunkl.hitting.tail_for_process(
            dunkl.dihedral.make_system(4, 1.0, 1.0), start, 1.0
        )
    with pytest.raises(dunkl.errors.RegimeError):
        dunkl.hitting.tail_series_case1(
            dunkl.dihedral.make_system(4, 0.5, 0.5), start, 1.0
        )
    with pytest.raises(dunkl.errors.RegimeError):
        dunkl.hitting.dual_system(dunkl.dihedral.make_system(4, 1.5, 0.5))
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.hitting.tail_series_k1(
            dunkl.dihedral.make_system(4, 1.0, 1.0), Point(0.0, 0.3), 1.0
        )


def test_jacobi_exit_tail():
    values = [
        dunkl.hitting.jacobi_exit_tail(0.75, 0.75, 0.4, t)
        for t in (0.05, 0.2, 1.0)
    ]
    assert 1.0 >= values[0] > values[1] > values[2] >= 0.0
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.hitting.jacobi_exit_tail(0.75, 0.75, 0.0, 1.0)


def test_empirical_tail_counts_censored_paths():
    """Test that censored paths count as survivors up to the horizon."""
    sample = dunkl.simulate.HittingSample(
        times=np.array([0.5, 1.0, 2.0, 2.0]),
        censored=np.array([False, False, False, True]),
        meta={"t_max": 2.0},
    )
    curve = dunkl.hitting.empirical_tail(sample, [0.25, 0.75, 1.5, 2.0])
    assert curve.values.tolist() == [1.0, 0.75, 0.5, 0.25]
    assert curve.meta == {"paths": 4, "censored": 1}
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.hitting.empirical_tail(sample, [1.0, 2.5])


def test_tail_curve_rejects_unsorted_grid():
    system = dunkl.dihedral.make_system(4, 0.25, 0.25)
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.hitting.tail_curve(system, Point(1.0, 0.3), [1.0, 0.5])
