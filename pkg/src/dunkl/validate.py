"""Reconciliation checks between independent routes to the same quantity.

Each check compares a series from `spectral`, `hermite` or `hitting` with
an oracle that shares no code with it: Gaussian image sums over the
dihedral group, Monte Carlo paths built from chi-square draws, or a second
closed form.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import shlex
import zlib

import numpy as np
import scipy.stats

import dunkl.dihedral
import dunkl.errors
import dunkl.hermite
import dunkl.hitting
import dunkl.series
import dunkl.simulate
import dunkl.specfun
import dunkl.spectral

logger = logging.getLogger(__name__)

# Monte Carlo checks below this many paths log a warning.
_MIN_PATHS = 10_000

# Default harness settings:
# - checks: comma-separated check names, or "all".
# - seed: base seed; each check derives its own from its name.
# - paths: paths for the density, radial and Jacobi checks.
# - hitting_paths: paths for the hitting-time checks.
# - dt: process-time step of the simulations.
# - workers: worker processes for path generation.
# - tol: series tolerance.
_DEFAULT_CONFIG = {
    "checks": "all",
    "seed": 0,
    "paths": 100_000,
    "hitting_paths": 200_000,
    "dt": 0.005,
    "workers": 1,
    "tol": 1e-12,
}

# Thresholds: gaps must stay below, p-values above.
_IMAGE_GAP = 1e-8
_MEHLER_GAP = 1e-8
_SERIES_GAP = 1e-9
_TRIPLE_GAP = 0.02
_CASE2_GAP = 0.03
_P_VALUE = 0.01


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    """Outcome of one check.

    Attributes:
        check_name: Check label.
        statistic: Gap (smaller is better) or p-value (larger is better).
        threshold: Bound the statistic is compared with.
        passed: Whether the statistic is within the threshold.
        meta: Parameters and sample sizes.
    """

    check_name: str
    statistic: float
    threshold: float
    passed: bool
    meta: dict = dataclasses.field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "statistic": float(self.statistic),
            "threshold": float(self.threshold),
            "passed": bool(self.passed),
            "meta": self.meta,
        }


def _gap_report(name, gap, threshold, meta) -> ValidationReport:
    gap = float(gap)
    return ValidationReport(
        name, gap, threshold, bool(gap < threshold), {"kind": "gap", **meta}
    )


def _pvalue_report(name, pvalue, threshold, meta) -> ValidationReport:
    pvalue = float(pvalue)
    return ValidationReport(
        name,
        pvalue,
        threshold,
        bool(pvalue > threshold),
        {"kind": "p_value", **meta},
    )


def _label(sys) -> str:
    if sys.parity == "odd":
        return f"n={sys.n},k={sys.k0:g}"
    return f"n={sys.n},k0={sys.k0:g},k1={sys.k1:g}"


def random_pairs(sys, count: int, seed: int, r_range=(0.2, 1.5)):
    """Random (x, y) pairs in the open chamber, plus one diagonal pair."""
    rng = np.random.Generator(np.random.Philox(seed))
    radii = rng.uniform(*r_range, size=(count, 2))
    angles = rng.uniform(0.02, 0.98, size=(count, 2)) * sys.chamber_angle
    pairs = [
        (
            dunkl.dihedral.PolarPoint(float(r[0]), float(a[0])),
            dunkl.dihedral.PolarPoint(float(r[1]), float(a[1])),
        )
        for r, a in zip(radii, angles)
    ]
    axis = dunkl.dihedral.PolarPoint(1.0, sys.chamber_angle / 2)
    pairs.append((axis, axis))
    return pairs


def image_sum(n: int, t: float, x, y, signed: bool) -> float:
    """Sum of planar Gaussian kernels over the images of y, per dr dtheta."""
    start = dunkl.dihedral.to_cartesian(x.r, x.theta)
    end = dunkl.dihedral.to_cartesian(y.r, y.theta)
    total = 0.0
    for element in dunkl.dihedral.group_elements(n):
        gap = start - element @ end
        kernel = math.exp(-float(gap @ gap) / (2 * t)) / (2 * math.pi * t)
        sign = round(float(np.linalg.det(element))) if signed else 1
        total += sign * kernel
    return y.r * total


def _image_check(name, sys, pairs, t, control, kernel, signed):
    gaps = []
    for x, y in pairs:
        series = kernel(sys, t, x, y, control).value
        gaps.append(abs(series - image_sum(sys.n, t, x, y, signed)))
    return _gap_report(
        name,
        max(gaps),
        _IMAGE_GAP,
        {"system": _label(sys), "t": t, "points": len(pairs)},
    )


def check_images_reflected(sys, pairs, t: float = 0.4, control=None):
    """Reflected kernel (k = 0) against the image sum over all 2n elements."""
    return _image_check(
        "images_reflected",
        sys,
        pairs,
        t,
        control,
        dunkl.spectral.reflected_kernel,
        signed=False,
    )


def check_images_killed(sys, pairs, t: float = 0.4, control=None):
    """Killed kernel against the image sum signed by det(w)."""
    return _image_check(
        "images_killed",
        sys,
        pairs,
        t,
        control,
        dunkl.spectral.killed_kernel,
        signed=True,
    )


def _warn_paths(name: str, n_paths: int) -> None:
    if n_paths < _MIN_PATHS:
        logger.warning("%s: only %d paths; statistics are noisy", name, n_paths)


def _snapshot(sys, cfg, t_snap):
    if not 0 < t_snap <= cfg.t_max:
        raise dunkl.errors.DomainError(
            f"t_snap must lie in (0, t_max]: {t_snap}"
        )
    ensemble = dunkl.simulate.build_dunkl_path(sys, cfg)
    index = int(np.argmin(np.abs(ensemble.times - t_snap)))
    return ensemble.radial[:, index], ensemble.angular[:, index]


def cell_masses(sys, t, x, r_edges, theta_edges, control=None, order=6):
    """Transition-density mass of each (r, theta) cell by Gauss-Legendre."""
    def rule(edges):
        nodes, weights = [], []
        for lower, upper in zip(edges[:-1], edges[1:]):
            panel = dunkl.specfun.gauss_legendre(
                order, float(lower), float(upper)
            )
            nodes.append(panel[0])
            weights.append(panel[1])
        return np.concatenate(nodes), np.concatenate(weights)

    r_nodes, r_weights = rule(r_edges)
    theta_nodes, theta_weights = rule(theta_edges)
    values = dunkl.spectral.transition_density_grid(
        sys, t, x, r_nodes[:, None], theta_nodes[None, :], control
    ).value
    weighted = values * r_weights[:, None] * theta_weights[None, :]
    shape = (len(r_edges) - 1, order, len(theta_edges) - 1, order)
    return weighted.reshape(shape).sum(axis=(1, 3))


def check_mc_density(sys, cfg, t_snap: float, bins: int = 20, control=None):
    """Chi-square of the simulated (r, theta) histogram against the series.

    Cells expected to hold fewer than 5 paths are pooled together with the
    mass beyond the radial cut-off.
    """
    name = "mc_density"
    _warn_paths(name, cfg.n_paths)
    radial, angular = _snapshot(sys, cfg, t_snap)
    r_max = dunkl.spectral.radial_limit(sys, t_snap, cfg.start.r)
    r_edges = np.linspace(0.0, r_max, bins + 1)
    theta_edges = np.linspace(0.0, sys.angular_span, bins + 1)
    masses = cell_masses(sys, t_snap, cfg.start, r_edges, theta_edges, control)
    observed, _, _ = np.histogram2d(
        radial, np.clip(angular, 0.0, sys.angular_span), [r_edges, theta_edges]
    )
    expected = cfg.n_paths * masses.ravel()
    observed = observed.ravel()
    keep = expected >= 5
    pooled_expected = cfg.n_paths - expected[keep].sum()
    pooled_observed = cfg.n_paths - observed[keep].sum()
    expected = np.append(expected[keep], max(pooled_expected, 0.0))
    observed = np.append(observed[keep], pooled_observed)
    used = expected > 0
    statistic = float(
        np.sum((observed[used] - expected[used]) ** 2 / expected[used])
    )
    dof = int(np.count_nonzero(used)) - 1
    pvalue = scipy.stats.chi2.sf(statistic, dof)
    return _pvalue_report(
        name,
        pvalue,
        _P_VALUE,
        {
            "system": _label(sys),
            "t": t_snap,
            "paths": cfg.n_paths,
            "chi2": statistic,
            "dof": dof,
        },
    )


def check_mc_radial(sys, cfg, t_snap: float):
    """KS test of the simulated |X_t| against the Bessel semigroup."""
    name = "mc_radial"
    _warn_paths(name, cfg.n_paths)
    radial, _ = _snapshot(sys, cfg, t_snap)
    grid, cdf = dunkl.spectral.radial_cdf(sys.gamma, t_snap, cfg.start.r)
    result = scipy.stats.kstest(radial, lambda v: np.interp(v, grid, cdf))
    return _pvalue_report(
        name,
        result.pvalue,
        _P_VALUE,
        {
            "system": _label(sys),
            "t": t_snap,
            "paths": cfg.n_paths,
            "ks": float(result.statistic),
        },
    )


def check_jacobi_constructions(
    k0, k1, j0, t, n_paths, seed, workers: int = 1
) -> ValidationReport:
    """Two-sample KS between the skew-product and Euler Jacobi marginals."""
    name = "jacobi_constructions"
    _warn_paths(name, n_paths)
    skew = dunkl.simulate.sample_jacobi_marginal(
        k0, k1, j0, t, n_paths, seed, method="skew", workers=workers
    )
    euler = dunkl.simulate.sample_jacobi_marginal(
        k0, k1, j0, t, n_paths, seed, method="euler", clock_step=2e-4,
        workers=workers,
    )
    result = scipy.stats.ks_2samp(skew, euler)
    return _pvalue_report(
        name,
        result.pvalue,
        _P_VALUE,
        {
            "k0": k0,
            "k1": k1,
            "j0": j0,
            "t": t,
            "paths": n_paths,
            "ks": float(result.statistic),
        },
    )


def check_tail_triple(sys, x, t_grid, n_paths, seed, dt, workers=1):
    """Case 1 at k = 1, the wedge formula and wedge Brownian exits agree."""
    name = "tail_triple"
    _warn_paths(name, n_paths)
    grid = np.asarray(t_grid, dtype=float)
    walls = dunkl.dihedral.unfolded(sys)
    case1 = np.array(
        [dunkl.hitting.tail_series_case1(sys, x, t) for t in grid]
    )
    wedge = np.array([dunkl.hitting.tail_series_k1(sys, x, t) for t in grid])
    sample = dunkl.simulate.wedge_exit_times(
        walls.angular_span, x, float(grid[-1]), dt, n_paths, seed,
        workers=workers,
    )
    empirical = dunkl.hitting.empirical_tail(sample, grid).values
    algebraic = float(np.max(np.abs(case1 - wedge)))
    statistic = float(np.max(np.abs(wedge - empirical)))
    return ValidationReport(
        name,
        statistic,
        _TRIPLE_GAP,
        bool(statistic < _TRIPLE_GAP and algebraic < _SERIES_GAP),
        {
            "kind": "gap",
            "system": _label(sys),
            "paths": n_paths,
            "series_gap": algebraic,
        },
    )


def check_tail_case2(sys, cfg, t_grid, control=None):
    """Case 2 series against simulated hitting times of the process."""
    name = "tail_case2"
    _warn_paths(name, cfg.n_paths)
    series = dunkl.hitting.tail_curve(sys, cfg.start, t_grid, control)
    sample = dunkl.simulate.sample_hitting_time(sys, cfg)
    empirical = dunkl.hitting.empirical_tail(sample, series.t_grid)
    gap = np.max(np.abs(series.values - empirical.values))
    return _gap_report(
        name,
        gap,
        _CASE2_GAP,
        {
            "system": _label(sys),
            "paths": cfg.n_paths,
            "bridge_correction": cfg.bridge_correction,
        },
    )


def check_mehler(sys, pairs, r: float = 0.3, control=None):
    """Largest relative residual of the Mehler identity over pairs."""
    residuals = [
        dunkl.hermite.mehler_check(sys, x, y, r, control) for x, y in pairs
    ]
    return _gap_report(
        "mehler",
        max(residuals),
        _MEHLER_GAP,
        {"system": _label(sys), "r": r, "points": len(pairs)},
    )


def parse_config(config_str):
    """Parse a whitespace-separated key=value string into a config dict."""
    cfg = dict(_DEFAULT_CONFIG)
    aliases = {
        "check": "checks",
        "n_paths": "paths",
        "hits": "hitting_paths",
        "step": "dt",
    }
    for part in shlex.split(config_str):
        if "=" not in part:
            continue
        key, value = part.split("=", 1)
        key = aliases.get(key, key)
        if key == "checks":
            cfg[key] = value
        elif key in ("seed", "paths", "hitting_paths", "workers"):
            cfg[key] = int(value)
        else:
            cfg[key] = float(value)
    return cfg


def _image_systems():
    return [
        dunkl.dihedral.make_system(3, 0.0),
        dunkl.dihedral.make_system(4, 0.0, 0.0),
        dunkl.dihedral.make_system(6, 0.0, 0.0),
    ]


def _run_images_reflected(cfg, seed, control):
    return [
        check_images_reflected(sys, random_pairs(sys, 20, seed), 0.4, control)
        for sys in _image_systems()
    ]


def _run_images_killed(cfg, seed, control):
    return [
        check_images_killed(sys, random_pairs(sys, 20, seed), 0.4, control)
        for sys in _image_systems()
    ]


def _sim_config(cfg, seed, n_paths, start, t_max):
    return dunkl.simulate.SimConfig(
        t_max=t_max,
        dt=min(cfg["dt"], t_max / 100),
        n_paths=n_paths,
        seed=seed,
        start=start,
        workers=cfg["workers"],
    )


def _run_mc_density(cfg, seed, control):
    sys = dunkl.dihedral.make_system(4, 1.0, 0.5)
    start = dunkl.dihedral.PolarPoint(1.0, 0.3)
    sim = _sim_config(cfg, seed, cfg["paths"], start, 0.5)
    return [check_mc_density(sys, sim, 0.5, control=control)]


def _run_mc_radial(cfg, seed, control):
    sys = dunkl.dihedral.make_system(4, 1.0, 0.5)
    start = dunkl.dihedral.PolarPoint(1.0, 0.3)
    sim = _sim_config(cfg, seed, cfg["paths"], start, 0.5)
    return [check_mc_radial(sys, sim, 0.5)]


def _run_jacobi_constructions(cfg, seed, control):
    return [
        check_jacobi_constructions(
            1.0, 0.5, 0.3, 0.5, cfg["paths"] // 2, seed, cfg["workers"]
        )
    ]


def _run_tail_triple(cfg, seed, control):
    sys = dunkl.dihedral.make_system(4, 1.0, 1.0)
    start = dunkl.dihedral.PolarPoint(1.0, math.pi / 16)
    grid = np.linspace(0.1, 3.0, 30)
    return [
        check_tail_triple(
            sys, start, grid, cfg["hitting_paths"], seed, cfg["dt"],
            cfg["workers"],
        )
    ]


def _run_tail_case2(cfg, seed, control):
    sys = dunkl.dihedral.make_system(4, 0.75, 0.25)
    start = dunkl.dihedral.PolarPoint(1.0, math.pi / 16)
    sim = _sim_config(cfg, seed, cfg["hitting_paths"], start, 3.0)
    grid = np.linspace(0.1, 3.0, 30)
    return [check_tail_case2(sys, sim, grid, control)]


def _run_mehler(cfg, seed, control):
    systems = [
        dunkl.dihedral.make_system(3, 0.7),
        dunkl.dihedral.make_system(4, 1.0, 0.5),
        dunkl.dihedral.make_system(6, 1.0, 1.0),
    ]
    pairs = [
        (
            dunkl.dihedral.PolarPoint(0.8, 0.15),
            dunkl.dihedral.PolarPoint(1.1, 0.35),
        ),
        (
            dunkl.dihedral.PolarPoint(0.5, 0.3),
            dunkl.dihedral.PolarPoint(0.9, 0.1),
        ),
    ]
    mehler_control = dunkl.series.SeriesControl(tol=cfg["tol"], degree_max=80)
    return [check_mehler(sys, pairs, 0.3, mehler_control) for sys in systems]


CHECKS = {
    "images_killed": _run_images_killed,
    "images_reflected": _run_images_reflected,
    "jacobi_constructions": _run_jacobi_constructions,
    "mc_density": _run_mc_density,
    "mc_radial": _run_mc_radial,
    "mehler": _run_mehler,
    "tail_case2": _run_tail_case2,
    "tail_triple": _run_tail_triple,
}


def check_seed(seed: int, name: str) -> int:
    """Seed of one check, derived from the base seed and the check name."""
    return (seed ^ zlib.crc32(name.encode("utf-8"))) % 2**64


def _selected(value: str) -> list[str]:
    if value.strip() == "all":
        return sorted(CHECKS)
    names = [name.strip() for name in value.split(",") if name.strip()]
    unknown = [name for name in names if name not in CHECKS]
    if unknown:
        raise dunkl.errors.DomainError(f"unknown checks: {', '.join(unknown)}")
    return sorted(set(names))


def run_all(config=None) -> list[ValidationReport]:
    """Run the selected checks and return their reports sorted by name.

    Args:
        config: A dict of overrides for _DEFAULT_CONFIG, a parse_config
            string, or None for the defaults.

    A check that raises is reported as failed rather than aborting the run.
    """
    if isinstance(config, str):
        cfg = parse_config(config)
    else:
        cfg = {**_DEFAULT_CONFIG, **(config or {})}
    control = dunkl.series.SeriesControl(tol=cfg["tol"])
    reports = []
    for name in _selected(cfg["checks"]):
        seed = check_seed(cfg["seed"], name)
        logger.info("running %s (seed %d)", name, seed)
        try:
            reports.extend(CHECKS[name](cfg, seed, control))
        except (ValueError, OverflowError) as exc:
            logger.error("%s failed: %s", name, exc)
            reports.append(
                ValidationReport(
                    name, math.nan, math.nan, False, {"error": str(exc)}
                )
            )
    return sorted(reports, key=lambda report: report.check_name)
