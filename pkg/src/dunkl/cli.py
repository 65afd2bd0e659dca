"""Command-line interface for dunkl."""

from __future__ import annotations

import argparse
import logging
import pathlib
import sys

import numpy as np
import scipy.stats

import dunkl.config
import dunkl.dihedral
import dunkl.errors
import dunkl.hermite
import dunkl.hitting
import dunkl.output
import dunkl.series
import dunkl.simulate
import dunkl.spectral
import dunkl.validate

_RADIAL_GRID = "0:3:31"


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Seed; falls back to $DUNKL_SEED, then 0.",
    )
    parser.add_argument(
        "--tol",
        type=float,
        default=1e-12,
        help="Relative series tolerance (default 1e-12).",
    )
    parser.add_argument(
        "--max-terms",
        type=int,
        default=400,
        help="Series term budget (default 400).",
    )
    parser.add_argument(
        "--output",
        "--out",
        default="-",
        help="Output path or '-' for stdout (default).",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log progress at INFO level.",
    )


def _add_system(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--n", type=int, required=True, help="Dihedral order n >= 3."
    )
    parser.add_argument(
        "--k0", type=float, required=True, help="Multiplicity k0."
    )
    parser.add_argument(
        "--k1",
        type=float,
        default=None,
        help="Multiplicity k1 (even n only).",
    )


def _add_workers(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--workers",
        type=int,
        default=1,
        help="Worker processes for path generation (default 1).",
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the CLI argument parser."""
    parser = argparse.ArgumentParser(
        prog="dunkl",
        description="Radial Dunkl processes for dihedral groups.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    density_parser = subparsers.add_parser(
        "density",
        help="Tabulate a transition density over an (r, theta) grid.",
    )
    _add_system(density_parser)
    density_parser.add_argument(
        "--t", type=float, required=True, help="Time t > 0."
    )
    density_parser.add_argument(
        "--from",
        dest="start",
        required=True,
        help="Starting point as r,theta.",
    )
    density_parser.add_argument(
        "--kernel",
        choices=["auto", "killed", "conditioned"],
        default="auto",
        help="auto: Dunkl density, reflected kernel when k = 0.",
    )
    density_parser.add_argument(
        "--r-grid",
        default=_RADIAL_GRID,
        help=f"Radii as start:stop:count or a list (default {_RADIAL_GRID}).",
    )
    density_parser.add_argument(
        "--theta-count",
        type=int,
        default=16,
        help="Angles spread evenly over the angular domain (default 16).",
    )
    _add_common(density_parser)

    gbf_parser = subparsers.add_parser(
        "gbf",
        help="Tabulate the generalized Bessel function D(x, y).",
    )
    _add_system(gbf_parser)
    gbf_parser.add_argument(
        "--from", dest="start", required=True, help="Point x as r,theta."
    )
    gbf_parser.add_argument(
        "--r-grid",
        default=_RADIAL_GRID,
        help=f"Radii of y (default {_RADIAL_GRID}).",
    )
    gbf_parser.add_argument(
        "--theta-count",
        type=int,
        default=16,
        help="Angles of y over the angular domain (default 16).",
    )
    _add_common(gbf_parser)

    hermite_parser = subparsers.add_parser(
        "hermite",
        help="Evaluate W-invariant Hermite polynomials and the Mehler check.",
    )
    _add_system(hermite_parser)
    hermite_parser.add_argument(
        "--at", required=True, help="Evaluation point as r,theta."
    )
    hermite_parser.add_argument(
        "--max-q", type=int, default=3, help="Largest Laguerre degree q."
    )
    hermite_parser.add_argument(
        "--max-j", type=int, default=3, help="Largest harmonic degree j."
    )
    hermite_parser.add_argument(
        "--mehler-y",
        default=None,
        help="Second point r,theta for a Mehler residual row.",
    )
    hermite_parser.add_argument(
        "--mehler-r",
        type=float,
        default=0.3,
        help="Mehler variable in (0, 1) (default 0.3).",
    )
    hermite_parser.add_argument(
        "--degree-max",
        type=int,
        default=80,
        help="Total-degree cutoff of the Mehler sum (default 80).",
    )
    _add_common(hermite_parser)

    simulate_parser = subparsers.add_parser(
        "simulate",
        help="Simulate paths or hitting times from squared Bessel processes.",
    )
    _add_system(simulate_parser)
    simulate_parser.add_argument(
        "--mode",
        choices=["paths", "hitting"],
        default="paths",
        help="Dump paths (default) or first hitting times.",
    )
    simulate_parser.add_argument(
        "--config",
        default=None,
        help="JSON file with SimConfig fields; overrides the flags below.",
    )
    simulate_parser.add_argument(
        "--from", dest="start", default="1,0.3", help="Start as r,theta."
    )
    simulate_parser.add_argument(
        "--t-max", type=float, default=1.0, help="Horizon (default 1)."
    )
    simulate_parser.add_argument(
        "--dt", type=float, default=0.005, help="Time step (default 0.005)."
    )
    simulate_parser.add_argument(
        "--paths", type=int, default=100, help="Number of paths."
    )
    simulate_parser.add_argument(
        "--no-bridge",
        action="store_true",
        help="Disable the Brownian-bridge exit correction.",
    )
    _add_workers(simulate_parser)
    _add_common(simulate_parser)

    hitting_parser = subparsers.add_parser(
        "hitting",
        help="Tail of the first hitting time of the chamber boundary.",
    )
    _add_system(hitting_parser)
    hitting_parser.add_argument(
        "--from", dest="start", required=True, help="Start as r,theta."
    )
    hitting_parser.add_argument(
        "--t-grid",
        default="0.1:3:30",
        help="Times as start:stop:count or a list (default 0.1:3:30).",
    )
    hitting_parser.add_argument(
        "--method",
        choices=["series", "mc", "both"],
        default="series",
        help="Series, Monte Carlo, or both with a gap summary.",
    )
    hitting_parser.add_argument(
        "--paths", type=int, default=20_000, help="Monte Carlo paths."
    )
    hitting_parser.add_argument(
        "--dt", type=float, default=0.005, help="Monte Carlo time step."
    )
    hitting_parser.add_argument(
        "--no-bridge",
        action="store_true",
        help="Disable the Brownian-bridge exit correction.",
    )
    _add_workers(hitting_parser)
    _add_common(hitting_parser)

    validate_parser = subparsers.add_parser(
        "validate",
        help="Run reconciliation checks and emit a JSON report.",
    )
    validate_parser.add_argument(
        "--checks",
        default="all",
        help="Comma-separated check names, or 'all' (default).",
    )
    validate_parser.add_argument(
        "--paths",
        type=int,
        default=None,
        help="Override the Monte Carlo path counts.",
    )
    _add_workers(validate_parser)
    _add_common(validate_parser)
    return parser


def _control(args, **extra) -> dunkl.series.SeriesControl:
    return dunkl.series.SeriesControl(
        tol=args.tol, max_terms=args.max_terms, **extra
    )


def _system(args) -> dunkl.dihedral.DihedralSystem:
    descriptor = {"n": args.n, "k0": args.k0}
    if args.k1 is not None:
        descriptor["k1"] = args.k1
    return dunkl.config.system_from_descriptor(descriptor)


def _angles(system, count: int, span: float) -> np.ndarray:
    if count < 1:
        raise dunkl.errors.DomainError(f"theta count must be >= 1: {count}")
    if count == 1:
        return np.array([span / 2])
    return np.linspace(0.0, span, count)


def _base_params(args) -> dict:
    return {"tol": args.tol, "max_terms": args.max_terms}


def cmd_density(args) -> tuple[str, int]:
    system = _system(args)
    ctl = _control(args)
    start = dunkl.config.parse_point(args.start)
    dunkl.dihedral.check_point(system, start)
    radii = np.asarray(dunkl.config.parse_grid(args.r_grid))
    kernel = args.kernel
    if kernel == "auto":
        kernel = "reflected" if system.k0 == system.k1 == 0 else "dunkl"
    grid_kernels = {
        "dunkl": dunkl.spectral.transition_density_grid,
        "reflected": dunkl.spectral.reflected_kernel_grid,
        "killed": dunkl.spectral.killed_kernel_grid,
        "conditioned": dunkl.spectral.conditioned_kernel_grid,
    }
    span = system.angular_span if kernel == "dunkl" else system.chamber_angle
    angles = _angles(system, args.theta_count, span)
    values = grid_kernels[kernel](
        system, args.t, start, radii[:, None], angles[None, :], ctl
    ).value
    values = np.broadcast_to(np.asarray(values), (radii.size, angles.size))
    rows = [
        (args.t, r, theta, values[i, k])
        for i, r in enumerate(radii)
        for k, theta in enumerate(angles)
    ]
    params = {**_base_params(args), "t": args.t, "from": [start.r, start.theta]}
    meta = dunkl.output.metadata_line(
        "density", system, None, params, kernel=kernel
    )
    header = ["t", "r", "theta", "density"]
    return dunkl.output.render_csv(header, rows, meta), 0


def cmd_gbf(args) -> tuple[str, int]:
    system = _system(args)
    ctl = _control(args)
    start = dunkl.config.parse_point(args.start)
    radii = np.asarray(dunkl.config.parse_grid(args.r_grid))
    angles = _angles(system, args.theta_count, system.angular_span)
    values = np.asarray(
        dunkl.spectral.generalized_bessel_grid(
            system, start, radii[:, None], angles[None, :], ctl
        ).value
    )
    values = np.broadcast_to(values, (radii.size, angles.size))
    rows = [
        (r, theta, values[i, k])
        for i, r in enumerate(radii)
        for k, theta in enumerate(angles)
    ]
    params = {**_base_params(args), "from": [start.r, start.theta]}
    meta = dunkl.output.metadata_line("gbf", system, None, params)
    return dunkl.output.render_csv(["r", "theta", "value"], rows, meta), 0


def cmd_hermite(args) -> tuple[str, int]:
    system = _system(args)
    ctl = _control(args, degree_max=args.degree_max)
    point = dunkl.config.parse_point(args.at)
    dunkl.dihedral.check_point(system, point)
    rows = []
    for q in range(args.max_q + 1):
        for j in range(args.max_j + 1):
            index = dunkl.hermite.HermiteIndex(q, j)
            value = dunkl.hermite.hermite_w(system, index, point)
            rows.append(("hermite", q, j, value))
    params = {
        **_base_params(args),
        "at": [point.r, point.theta],
        "degree_max": args.degree_max,
    }
    if args.mehler_y is not None:
        other = dunkl.config.parse_point(args.mehler_y)
        dunkl.dihedral.check_point(system, other)
        residual = dunkl.hermite.mehler_check(
            system, point, other, args.mehler_r, ctl
        )
        rows.append(("mehler_residual", "", "", residual))
        params["mehler_y"] = [other.r, other.theta]
        params["mehler_r"] = args.mehler_r
    meta = dunkl.output.metadata_line("hermite", system, None, params)
    header = ["quantity", "q", "j", "value"]
    return dunkl.output.render_csv(header, rows, meta), 0


def _sim_config(args, seed) -> dunkl.simulate.SimConfig:
    if args.config is not None:
        record = dunkl.config.load_json(args.config)
        return dunkl.config.sim_config_from_dict(record, seed)
    start = dunkl.config.parse_point(args.start)
    return dunkl.simulate.SimConfig(
        t_max=args.t_max,
        dt=args.dt,
        n_paths=args.paths,
        seed=seed,
        start=start,
        workers=args.workers,
        bridge_correction=not args.no_bridge,
    )


def cmd_simulate(args) -> tuple[str, int]:
    system = _system(args)
    seed = dunkl.config.resolve_seed(args.seed)
    cfg = _sim_config(args, seed)
    params = {
        "mode": args.mode,
        "t_max": cfg.t_max,
        "dt": cfg.dt,
        "paths": cfg.n_paths,
        "from": [cfg.start.r, cfg.start.theta],
        "workers": cfg.workers,
    }
    if args.mode == "hitting":
        sample = dunkl.simulate.sample_hitting_time(system, cfg)
        rows = [
            (i, time, flag)
            for i, (time, flag) in enumerate(zip(sample.times, sample.censored))
        ]
        extra = {
            key: value for key, value in sample.meta.items() if key != "seed"
        }
        meta = dunkl.output.metadata_line(
            "simulate", system, cfg.seed, params, **extra
        )
        header = ["path_id", "T0", "censored"]
        return dunkl.output.render_csv(header, rows, meta), 0

    ensemble = dunkl.simulate.build_dunkl_path(system, cfg)
    upper = system.angular_span
    inside = (ensemble.radial >= 0) & (ensemble.angular >= 0)
    inside &= ensemble.angular <= upper + 1e-12
    grid, cdf = dunkl.spectral.radial_cdf(
        system.gamma, cfg.t_max, cfg.start.r
    )
    ks = scipy.stats.kstest(
        ensemble.radial[:, -1], lambda v: np.interp(v, grid, cdf)
    )
    rows = [
        (i, t, ensemble.radial[i, k], ensemble.angular[i, k], inside[i, k])
        for i in range(cfg.n_paths)
        for k, t in enumerate(ensemble.times)
    ]
    meta = dunkl.output.metadata_line(
        "simulate",
        system,
        cfg.seed,
        params,
        radial_ks={
            "t": cfg.t_max,
            "statistic": float(ks.statistic),
            "pvalue": float(ks.pvalue),
        },
    )
    header = ["path_id", "t", "r", "theta", "inside"]
    return dunkl.output.render_csv(header, rows, meta), 0


def cmd_hitting(args) -> tuple[str, int]:
    system = _system(args)
    ctl = _control(args)
    start = dunkl.config.parse_point(args.start)
    grid = dunkl.config.parse_grid(args.t_grid)
    params = {
        **_base_params(args),
        "from": [start.r, start.theta],
        "method": args.method,
    }
    rows = []
    extra = {"case": dunkl.hitting.hitting_case(system)}
    series = None
    if args.method in ("series", "both"):
        series = dunkl.hitting.tail_curve(system, start, grid, ctl)
        rows.extend(
            (t, value, "series", terms)
            for t, value, terms in zip(
                series.t_grid, series.values, series.meta["terms"]
            )
        )
    seed = None
    if args.method in ("mc", "both"):
        seed = dunkl.config.resolve_seed(args.seed)
        cfg = dunkl.simulate.SimConfig(
            t_max=float(max(grid)),
            dt=args.dt,
            n_paths=args.paths,
            seed=seed,
            start=start,
            workers=args.workers,
            bridge_correction=not args.no_bridge,
        )
        sample = dunkl.simulate.sample_hitting_time(system, cfg)
        empirical = dunkl.hitting.empirical_tail(sample, grid)
        rows.extend(
            (t, value, "mc", cfg.n_paths)
            for t, value in zip(empirical.t_grid, empirical.values)
        )
        extra["bridge_correction"] = cfg.bridge_correction
        if series is not None:
            gap = np.max(np.abs(series.values - empirical.values))
            extra["sup_gap"] = float(gap)
    meta = dunkl.output.metadata_line("hitting", system, seed, params, **extra)
    header = ["t", "tail", "method", "terms_or_paths"]
    return dunkl.output.render_csv(header, rows, meta), 0


def cmd_validate(args) -> tuple[str, int]:
    config = {
        "checks": args.checks,
        "seed": dunkl.config.resolve_seed(args.seed),
        "workers": args.workers,
        "tol": args.tol,
    }
    if args.paths is not None:
        config["paths"] = args.paths
        config["hitting_paths"] = args.paths
    reports = dunkl.validate.run_all(config)
    status = 0 if all(report.passed for report in reports) else 1
    return dunkl.output.render_reports(reports), status


_COMMANDS = {
    "density": cmd_density,
    "gbf": cmd_gbf,
    "hermite": cmd_hermite,
    "simulate": cmd_simulate,
    "hitting": cmd_hitting,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    """Run the dunkl CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO)
    try:
        output, status = _COMMANDS[args.command](args)
    except (ValueError, OverflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.output == "-":
        sys.stdout.write(output)
    else:
        pathlib.Path(args.output).write_text(output, encoding="utf-8")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
