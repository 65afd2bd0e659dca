"""Unit tests for skew-product path simulation."""

import dataclasses
import logging
import math
import pathlib
import sys

import numpy as np
import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import dunkl.dihedral
import dunkl.errors
import dunkl.hitting
import dunkl.simulate

Point = dunkl.dihedral.PolarPoint


def _config(**overrides):
    fields = {
        "t_max": 0.1,
        "dt": 0.0008,
        "n_paths": 200,
        "seed": 11,
        "start": Point(1.0, 0.3),
    }
    fields.update(overrides)
    return dunkl.simulate.SimConfig(**fields)


def test_sim_config_validation():
    """Test the step, path-count and seed bounds of SimConfig."""
    cfg = _config()
    assert cfg.steps == 125
    assert cfg.time_grid()[-1] == pytest.approx(0.1)
    with pytest.raises(dunkl.errors.DomainError):
        _config(dt=0.01)
    with pytest.raises(dunkl.errors.DomainError):
        _config(n_paths=0)
    with pytest.raises(dunkl.errors.DomainError):
        _config(seed=-1)
    with pytest.raises(dunkl.errors.DomainError):
        _config(seed=2**64)
    with pytest.raises(dunkl.errors.DomainError):
        _config(workers=0)


def test_substreams_are_reproducible_and_distinct():
    first = dunkl.simulate.substream(5, 1, 0).random(4)
    again = dunkl.simulate.substream(5, 1, 0).random(4)
    other_block = dunkl.simulate.substream(5, 1, 1).random(4)
    other_stream = dunkl.simulate.substream(5, 2, 0).random(4)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other_block)
    assert not np.array_equal(first, other_stream)


def test_squared_bessel_transition_mean():
    """Test E[Z_dt] = z0 + dim * dt for the exact transition."""
    rng = dunkl.simulate.substream(3, 9, 0)
    draws = dunkl.simulate.sample_squared_bessel(
        3.0, np.full(100_000, 1.0), 0.1, rng
    )
    assert np.all(draws >= 0)
    assert float(np.mean(draws)) == pytest.approx(1.3, abs=0.01)
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.simulate.sample_squared_bessel(0.5, 1.0, 0.1, rng)


def test_jacobi_constructions_stay_in_unit_interval():
    rng = dunkl.simulate.substream(1, 9, 0)
    grid = np.linspace(0.0, 0.5, 101)
    values, clock = dunkl.simulate.simulate_jacobi_skew(
        1.0, 0.5, 0.3, grid, rng, n_paths=50
    )
    assert values.shape == clock.shape == (50, 101)
    assert np.all((values >= 0) & (values <= 1))
    assert np.all(np.diff(clock, axis=1) > 0)
    euler = dunkl.simulate.simulate_jacobi_euler(
        1.0, 0.5, 0.3, grid, rng, n_paths=50
    )
    assert np.all((euler >= 0) & (euler <= 1))
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.simulate.simulate_jacobi_euler(1.0, 0.5, 1.5, grid, rng)


def test_jacobi_marginal_mean():
    """Test E[J_t] = j* + (j0 - j*) exp(-(d + d') t) for the skew product."""
    samples = dunkl.simulate.sample_jacobi_marginal(
        1.0, 0.5, 0.8, 0.2, 20_000, seed=4
    )
    stationary = 2.0 / 5.0
    expected = stationary + (0.8 - stationary) * math.exp(-1.0)
    assert float(np.mean(samples)) == pytest.approx(expected, abs=0.02)
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.simulate.sample_jacobi_marginal(
            1.0, 0.5, 0.8, 0.2, 10, seed=4, method="exact"
        )


def test_jacobi_marginal_ignores_worker_count():
    """Test that block substreams make results independent of workers."""
    n_paths = dunkl.simulate.BLOCK_SIZE + 100
    serial = dunkl.simulate.sample_jacobi_marginal(
        1.0, 0.5, 0.3, 0.05, n_paths, seed=8, workers=1
    )
    parallel = dunkl.simulate.sample_jacobi_marginal(
        1.0, 0.5, 0.3, 0.05, n_paths, seed=8, workers=2
    )
    assert np.array_equal(serial, parallel)


def test_build_dunkl_path_shapes_and_containment():
    """Test path shapes, the starting point and chamber containment."""
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    cfg = _config()
    paths = dunkl.simulate.build_dunkl_path(system, cfg)
    shape = (cfg.n_paths, cfg.steps + 1)
    for array in (
        paths.radial,
        paths.angular,
        paths.inverse_clock,
        paths.additive_clock,
        paths.jacobi_clock,
    ):
        assert array.shape == shape
    assert np.allclose(paths.radial[:, 0], 1.0)
    assert np.allclose(paths.angular[:, 0], 0.3)
    assert np.all(paths.radial > 0)
    assert np.all(paths.angular >= 0)
    assert np.all(paths.angular <= system.angular_span + 1e-12)
    assert np.all(np.diff(paths.additive_clock, axis=1) >= 0)
    assert paths.meta["paths"] == cfg.n_paths


def test_build_dunkl_path_is_deterministic():
    """Test that identical configs give identical paths for any workers."""
    system = dunkl.dihedral.make_system(3, 0.7)
    cfg = _config(
        n_paths=dunkl.simulate.BLOCK_SIZE + 10, t_max=0.05, dt=0.0004
    )
    first = dunkl.simulate.build_dunkl_path(system, cfg)
    second = dunkl.simulate.build_dunkl_path(
        system, dataclasses.replace(cfg, workers=2)
    )
    assert np.array_equal(first.radial, second.radial)
    assert np.array_equal(first.angular, second.angular)


def test_additive_and_jacobi_clocks_agree():
    """Test p**2 A_t = F(L_t) up to discretization error."""
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    paths = dunkl.simulate.build_dunkl_path(system, _config())
    additive = system.p**2 * paths.additive_clock[:, -1]
    jacobi = paths.jacobi_clock[:, -1]
    relative = np.abs(additive - jacobi) / jacobi
    assert float(np.median(relative)) < 0.05


def test_radial_second_moment():
    """Test E|X_t|**2 = |x|**2 + 2(gamma + 1)t."""
    system = dunkl.dihedral.make_system(4, 1.0, 0.5)
    paths = dunkl.simulate.build_dunkl_path(system, _config(n_paths=5000))
    moment = float(np.mean(paths.radial[:, -1] ** 2))
    expected = 1.0 + 2 * (system.gamma + 1) * 0.1
    assert moment == pytest.approx(expected, abs=0.06)


def test_hitting_sample_outside_regime_is_censored(caplog):
    """Test that a non-hitting system warns and censors every path."""
    system = dunkl.dihedral.make_system(4, 1.0, 1.0)
    cfg = _config(n_paths=50)
    with caplog.at_level(logging.WARNING):
        sample = dunkl.simulate.sample_hitting_time(system, cfg)
    assert np.all(sample.censored)
    assert np.all(sample.times == cfg.t_max)
    assert sample.meta["hitting_regime"] is False
    assert any("infinite" in record.message for record in caplog.records)


def test_hitting_sample_in_regime():
    system = dunkl.dihedral.make_system(4, 0.25, 0.25)
    cfg = _config(t_max=2.0, dt=0.01, n_paths=500, start=Point(1.0, 0.4))
    sample = dunkl.simulate.sample_hitting_time(system, cfg)
    assert np.any(~sample.censored)
    assert np.all(sample.times <= cfg.t_max)
    assert np.all(sample.times[sample.censored] == cfg.t_max)
    again = dunkl.simulate.sample_hitting_time(system, cfg)
    assert np.array_equal(sample.times, again.times)
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.simulate.sample_hitting_time(
            system, _config(start=Point(1.0, 0.0))
        )


@pytest.mark.parametrize("bridge_correction", [True, False])
def test_hitting_tail_matches_series(bridge_correction):
    """Test both exit detectors against the series tail of T0."""
    system = dunkl.dihedral.make_system(4, 0.75, 0.25)
    start = Point(1.0, math.pi / 16)
    cfg = _config(
        t_max=1.5,
        dt=0.005,
        n_paths=4000,
        seed=7,
        start=start,
        bridge_correction=bridge_correction,
    )
    sample = dunkl.simulate.sample_hitting_time(system, cfg)
    assert sample.meta["bridge_correction"] is bridge_correction
    assert np.mean(~sample.censored) > 0.3
    grid = [0.25, 0.5, 1.0]
    empirical = dunkl.hitting.empirical_tail(sample, grid).values
    series = [dunkl.hitting.tail_for_process(system, start, t) for t in grid]
    assert np.max(np.abs(empirical - series)) < 0.05, (empirical, series)


def test_wedge_exits_match_wedge_formula():
    """Test Brownian wedge exits against the closed-form wedge tail."""
    system = dunkl.dihedral.make_system(4, 1.0, 1.0)
    start = Point(1.0, math.pi / 8)
    grid = [0.2, 0.5, 1.0]
    sample = dunkl.simulate.wedge_exit_times(
        math.pi / 4, start, 1.0, 0.005, 20_000, seed=2
    )
    empirical = dunkl.hitting.empirical_tail(sample, grid).values
    series = [dunkl.hitting.tail_series_k1(system, start, t) for t in grid]
    assert np.max(np.abs(empirical - series)) < 0.02
    with pytest.raises(dunkl.errors.DomainError):
        dunkl.simulate.wedge_exit_times(
            math.pi / 4, Point(1.0, 1.0), 1.0, 0.005, 10, seed=2
        )
