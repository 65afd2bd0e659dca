"""Pathwise simulation from two independent squared Bessel processes.

Z1**2 and Z2**2 are squared Bessel processes of dimensions d = 2 k1 + 1
and d' = 2 k0 + 1, advanced with their exact noncentral chi-square
transitions. With Z = Z1**2 + Z2**2:

    |X_tau|     = p Z**(1/(2p))
    theta_tau   = arccos(sqrt(Z1**2 / Z)) / p
    tau_u       = int_0^u ds / Z_s**((p-1)/p)
    F_u         = int_0^u ds / Z_s          (p**2 A_t = F at u = L_t)

J = Z1**2 / Z on the F clock is the Jacobi process of parameters (d, d').

Paths are generated in fixed blocks of BLOCK_SIZE, each block drawing from
its own Philox substream keyed by (seed, stream, block index), so results
do not depend on how blocks are scheduled across worker processes.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import multiprocessing

import numpy as np
import scipy.integrate
import scipy.special

import dunkl.dihedral
import dunkl.errors

logger = logging.getLogger(__name__)

BLOCK_SIZE = 4096

# Driving steps allowed per nominal step before giving up on a horizon.
_EXTENSION_CAP = 8

# Boundary shift, in units of the step standard deviation, that corrects a
# discretely monitored exit for the crossings missed between grid times.
_MONITOR_SHIFT = -float(scipy.special.zeta(0.5)) / math.sqrt(2 * math.pi)

_STREAM_PATHS = 1
_STREAM_HITTING = 2
_STREAM_SKEW = 3
_STREAM_EULER = 4
_STREAM_WEDGE = 5


@dataclasses.dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    Attributes:
        t_max: Process-time horizon.
        dt: Process-time step of the driving clock and the output grid.
        n_paths: Number of paths.
        seed: 64-bit seed.
        start: Starting point in the chamber.
        workers: Worker processes; 1 runs in-process.
        bridge_correction: Detect exits between grid times with the
            Brownian-bridge crossing probability. When off, an exit is
            detected at grid times against walls shifted inward by
            0.5826 step standard deviations.
    """

    t_max: float
    dt: float
    n_paths: int
    seed: int
    start: dunkl.dihedral.PolarPoint
    workers: int = 1
    bridge_correction: bool = True

    def __post_init__(self) -> None:
        if not self.t_max > 0:
            raise dunkl.errors.DomainError(
                f"t_max must be positive: {self.t_max}"
            )
        if not 0 < self.dt <= self.t_max / 100:
            raise dunkl.errors.DomainError(
                f"dt must lie in (0, t_max/100]: dt={self.dt}, "
                f"t_max={self.t_max}"
            )
        if self.n_paths < 1:
            raise dunkl.errors.DomainError(
                f"n_paths must be at least 1: {self.n_paths}"
            )
        if not 0 <= self.seed < 2**64:
            raise dunkl.errors.DomainError(
                f"seed must fit in 64 bits: {self.seed}"
            )
        if self.workers < 1:
            raise dunkl.errors.DomainError(
                f"workers must be at least 1: {self.workers}"
            )

    @property
    def steps(self) -> int:
        return int(round(self.t_max / self.dt))

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.steps + 1)


@dataclasses.dataclass(frozen=True)
class PathEnsemble:
    """Simulated paths on the process-time grid.

    Arrays other than times have shape (n_paths, len(times)).
    inverse_clock holds L_t, the driving time at which tau reaches t;
    additive_clock holds A_t = int_0^t ds / |X_s|**2; jacobi_clock holds
    F at L_t.
    """

    times: np.ndarray
    radial: np.ndarray
    angular: np.ndarray
    inverse_clock: np.ndarray
    additive_clock: np.ndarray
    jacobi_clock: np.ndarray
    meta: dict


@dataclasses.dataclass(frozen=True)
class HittingSample:
    """Per-path first hitting times; censored paths carry t_max."""

    times: np.ndarray
    censored: np.ndarray
    meta: dict


def substream(seed: int, stream: int, block: int) -> np.random.Generator:
    """Counter-based generator for one block of one stream."""
    sequence = np.random.SeedSequence(seed, spawn_key=(stream, block))
    return np.random.Generator(np.random.Philox(sequence))


def _blocks(n_paths: int) -> list[tuple[int, int]]:
    count = -(-n_paths // BLOCK_SIZE)
    return [
        (block, min(BLOCK_SIZE, n_paths - block * BLOCK_SIZE))
        for block in range(count)
    ]


def _run_blocks(worker, tasks: list, workers: int) -> list:
    """Map worker over tasks, in order, optionally in a process pool."""
    if workers <= 1 or len(tasks) <= 1:
        return [worker(task) for task in tasks]
    with multiprocessing.Pool(min(workers, len(tasks))) as pool:
        return pool.map(worker, tasks)


def _dimensions(k0: float, k1: float) -> tuple[float, float]:
    if k0 < 0 or k1 < 0:
        raise dunkl.errors.DomainError(
            f"multiplicities must be nonnegative: k0={k0}, k1={k1}"
        )
    return 2 * k1 + 1, 2 * k0 + 1


def sample_squared_bessel(dim: float, z0, dt, rng: np.random.Generator):
    """One exact transition of a squared Bessel process.

    Z_{t+dt} = dt * chi2'(dim, z0 / dt), a scaled noncentral chi-square.
    """
    if dim < 1:
        raise dunkl.errors.DomainError(f"dimension must be >= 1: {dim}")
    z0 = np.asarray(z0, dtype=float)
    dt = np.asarray(dt, dtype=float)
    if np.any(z0 < 0) or np.any(dt <= 0):
        raise dunkl.errors.DomainError("need z0 >= 0 and dt > 0")
    shape = np.broadcast_shapes(z0.shape, dt.shape)
    draws = rng.noncentral_chisquare(dim, np.broadcast_to(z0 / dt, shape))
    result = dt * draws
    return float(result) if np.ndim(result) == 0 else result


def _check_unit_start(j0: float) -> None:
    if not 0 <= j0 <= 1:
        raise dunkl.errors.DomainError(f"j0 must lie in [0, 1]: {j0}")


def simulate_jacobi_skew(k0, k1, j0, grid, rng, n_paths: int = 1):
    """Jacobi paths from the skew product J_F = Z1**2 / (Z1**2 + Z2**2).

    Args:
        k0, k1: Multiplicities; d = 2 k1 + 1, d' = 2 k0 + 1.
        j0: Starting value in [0, 1].
        grid: Increasing driving-time grid starting at 0.
        rng: numpy Generator.
        n_paths: Number of paths.

    Returns:
        A pair (J, F) of arrays of shape (n_paths, len(grid)): J at the
        Jacobi clock values F.
    """
    dim, dim_prime = _dimensions(k0, k1)
    _check_unit_start(j0)
    steps = np.diff(np.asarray(grid, dtype=float))
    z1 = np.full(n_paths, float(j0))
    z2 = np.full(n_paths, 1.0 - j0)
    j_rows, f_rows = [z1 / (z1 + z2)], [np.zeros(n_paths)]
    clock = np.zeros(n_paths)
    for step in steps:
        total = z1 + z2
        z1 = sample_squared_bessel(dim, z1, step, rng)
        z2 = sample_squared_bessel(dim_prime, z2, step, rng)
        following = z1 + z2
        if np.any(following <= 0):
            raise dunkl.errors.DegenerateError(
                "Z1**2 + Z2**2 reached zero; refine the grid"
            )
        clock = clock + step * (1 / total + 1 / following) / 2
        j_rows.append(z1 / following)
        f_rows.append(clock)
    return np.stack(j_rows, axis=1), np.stack(f_rows, axis=1)


def simulate_jacobi_euler(k0, k1, j0, grid, rng, n_paths: int = 1):
    """Euler-Maruyama paths of dJ = 2 sqrt(J(1-J)) dB + (d - (d+d')J) dt.

    Each step is clamped back into [0, 1].

    Returns:
        Array of shape (n_paths, len(grid)).
    """
    dim, dim_prime = _dimensions(k0, k1)
    _check_unit_start(j0)
    steps = np.diff(np.asarray(grid, dtype=float))
    value = np.full(n_paths, float(j0))
    rows = [value]
    for step in steps:
        noise = rng.standard_normal(n_paths)
        drift = dim - (dim + dim_prime) * value
        spread = 2 * np.sqrt(value * (1 - value))
        value = np.clip(
            value + drift * step + spread * math.sqrt(step) * noise, 0.0, 1.0
        )
        rows.append(value)
    return np.stack(rows, axis=1)


def _skew_marginal(k0, k1, j0, t, size, rng, clock_step) -> np.ndarray:
    """J at Jacobi-clock time t, stepping so that F advances ~clock_step."""
    dim, dim_prime = _dimensions(k0, k1)
    z1 = np.full(size, float(j0))
    z2 = np.full(size, 1.0 - j0)
    clock = np.zeros(size)
    result = np.full(size, np.nan)
    pending = np.ones(size, dtype=bool)
    cap = _EXTENSION_CAP * int(math.ceil(t / clock_step)) + 100
    for _ in range(cap):
        idx = np.flatnonzero(pending)
        if idx.size == 0:
            return result
        total = z1[idx] + z2[idx]
        du = clock_step * total
        new1 = sample_squared_bessel(dim, z1[idx], du, rng)
        new2 = sample_squared_bessel(dim_prime, z2[idx], du, rng)
        following = new1 + new2
        if np.any(following <= 0):
            raise dunkl.errors.DegenerateError("Z1**2 + Z2**2 reached zero")
        new_clock = clock[idx] + du * (1 / total + 1 / following) / 2
        before = z1[idx] / total
        after = new1 / following
        crossed = new_clock >= t
        share = (t - clock[idx]) / (new_clock - clock[idx])
        result[idx[crossed]] = (before + share * (after - before))[crossed]
        pending[idx[crossed]] = False
        z1[idx], z2[idx], clock[idx] = new1, new2, new_clock
    raise dunkl.errors.InversionError(
        f"Jacobi clock did not reach t={t} within {cap} steps"
    )


def _marginal_block(task) -> np.ndarray:
    k0, k1, j0, t, seed, method, clock_step, block, size = task
    if method == "skew":
        rng = substream(seed, _STREAM_SKEW, block)
        return _skew_marginal(k0, k1, j0, t, size, rng, clock_step)
    rng = substream(seed, _STREAM_EULER, block)
    steps = max(1, int(round(t / clock_step)))
    grid = np.linspace(0.0, t, steps + 1)
    return simulate_jacobi_euler(k0, k1, j0, grid, rng, size)[:, -1]


def sample_jacobi_marginal(
    k0: float,
    k1: float,
    j0: float,
    t: float,
    n_paths: int,
    seed: int,
    method: str = "skew",
    clock_step: float = 1e-3,
    workers: int = 1,
) -> np.ndarray:
    """Samples of the Jacobi process at time t by either construction."""
    if method not in ("skew", "euler"):
        raise dunkl.errors.DomainError(f"unknown method: {method}")
    _dimensions(k0, k1)
    _check_unit_start(j0)
    tasks = [
        (k0, k1, j0, t, seed, method, clock_step, block, size)
        for block, size in _blocks(n_paths)
    ]
    return np.concatenate(_run_blocks(_marginal_block, tasks, workers))


def _start_state(sys, start, size):
    """Z1**2 and Z2**2 at time zero for X_0 = start."""
    phi = float(dunkl.dihedral.fold(sys, start.theta))
    total = (start.r / sys.p) ** (2 * sys.p)
    z1 = np.full(size, total * math.cos(sys.p * phi) ** 2)
    z2 = np.full(size, total - z1[0])
    return z1, np.maximum(z2, 0.0)


def _drive(sys, z1, z2, dt, rng):
    """Advance the driving clock so that tau advances about dt.

    Returns:
        (new z1, new z2, d_tau, d_F, du).
    """
    dim, dim_prime = _dimensions(sys.k0, sys.k1)
    exponent = (sys.p - 1) / sys.p
    total = z1 + z2
    du = dt * np.power(np.maximum(total, dt**sys.p), exponent)
    new1 = sample_squared_bessel(dim, z1, du, rng)
    new2 = sample_squared_bessel(dim_prime, z2, du, rng)
    following = new1 + new2
    if np.any(following <= 0):
        raise dunkl.errors.DegenerateError("Z1**2 + Z2**2 reached zero")
    with np.errstate(divide="ignore"):
        rate_before = np.power(total, -exponent)
        inverse_before = 1 / total
    rate_after = np.power(following, -exponent)
    d_tau = np.where(
        total > 0,
        du * (rate_before + rate_after) / 2,
        du * rate_after / (1 - exponent),
    )
    d_clock = du * (inverse_before + 1 / following) / 2
    return new1, new2, d_tau, d_clock, du


def _angle(sys, z1, z2):
    share = np.clip(z1 / (z1 + z2), 0.0, 1.0)
    return np.arccos(np.sqrt(share)) / sys.p


def _dunkl_block(task):
    sys, cfg, block, size = task
    rng = substream(cfg.seed, _STREAM_PATHS, block)
    z1, z2 = _start_state(sys, cfg.start, size)
    tau = np.zeros(size)
    clock = np.zeros(size)
    drive = np.zeros(size)
    rows = {"tau": [tau], "F": [clock], "u": [drive], "z1": [z1], "z2": [z2]}
    cap = _EXTENSION_CAP * cfg.steps
    count = 0
    while np.min(tau) < cfg.t_max:
        count += 1
        if count > cap:
            raise dunkl.errors.InversionError(
                f"tau stayed below t_max={cfg.t_max} after {cap} driving steps"
            )
        z1, z2, d_tau, d_clock, du = _drive(sys, z1, z2, cfg.dt, rng)
        tau, clock, drive = tau + d_tau, clock + d_clock, drive + du
        for key, value in (
            ("tau", tau), ("F", clock), ("u", drive), ("z1", z1), ("z2", z2)
        ):
            rows[key].append(value)
    arrays = {key: np.stack(value, axis=1) for key, value in rows.items()}
    extended = count > cfg.steps
    radial_path = sys.p * np.power(arrays["z1"] + arrays["z2"], 1 / (2 * sys.p))
    angular_path = _angle(sys, arrays["z1"], arrays["z2"])
    grid = cfg.time_grid()
    out = {key: np.empty((size, grid.size)) for key in ("r", "a", "L", "F")}
    for i in range(size):
        knots = arrays["tau"][i]
        out["r"][i] = np.interp(grid, knots, radial_path[i])
        out["a"][i] = np.interp(grid, knots, angular_path[i])
        out["L"][i] = np.interp(grid, knots, arrays["u"][i])
        out["F"][i] = np.interp(grid, knots, arrays["F"][i])
    return out, extended


def build_dunkl_path(
    sys: dunkl.dihedral.DihedralSystem, cfg: SimConfig
) -> PathEnsemble:
    """Simulate the radial Dunkl process from two squared Bessel processes.

    The driving clock is stepped so that tau advances by about cfg.dt per
    step and is extended until every path covers t_max; values are then
    read off the process-time grid by piecewise-linear inversion of tau.
    """
    dunkl.dihedral.check_point(sys, cfg.start)
    tasks = [(sys, cfg, block, size) for block, size in _blocks(cfg.n_paths)]
    results = _run_blocks(_dunkl_block, tasks, cfg.workers)
    if any(extended for _, extended in results):
        logger.warning(
            "driving clock extended beyond %d steps to cover t_max", cfg.steps
        )
    parts = [part for part, _ in results]
    grid = cfg.time_grid()
    radial = np.concatenate([part["r"] for part in parts])
    with np.errstate(divide="ignore"):
        inverse_sq = 1 / radial**2
    additive = scipy.integrate.cumulative_trapezoid(
        inverse_sq, grid, axis=1, initial=0.0
    )
    return PathEnsemble(
        times=grid,
        radial=radial,
        angular=np.concatenate([part["a"] for part in parts]),
        inverse_clock=np.concatenate([part["L"] for part in parts]),
        additive_clock=additive,
        jacobi_clock=np.concatenate([part["F"] for part in parts]),
        meta={
            "paths": cfg.n_paths,
            "dt": cfg.dt,
            "seed": cfg.seed,
            "block_size": BLOCK_SIZE,
        },
    )


def hitting_regime(sys: dunkl.dihedral.DihedralSystem) -> bool:
    """True when some index l is negative, so T0 is finite a.s."""
    walls = dunkl.dihedral.unfolded(sys)
    return walls.k0 < 0.5 or walls.k1 < 0.5


def _bridge_cross(gap_before, gap_after, d_clock):
    """Probability that a unit-variance bridge touches 0 between gaps."""
    with np.errstate(divide="ignore", over="ignore"):
        exponent = -2 * gap_before * gap_after / d_clock
    return np.where(
        (gap_before > 0) & (gap_after > 0), np.exp(exponent), 1.0
    )


def _hitting_block(task):
    walls, cfg, block, size = task
    rng = substream(cfg.seed, _STREAM_HITTING, block)
    dim, dim_prime = _dimensions(walls.k0, walls.k1)
    z1, z2 = _start_state(walls, cfg.start, size)
    tau = np.zeros(size)
    times = np.full(size, cfg.t_max)
    censored = np.ones(size, dtype=bool)
    alive = np.ones(size, dtype=bool)
    cap = _EXTENSION_CAP * cfg.steps
    for _ in range(cap):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            return times, censored
        before1, before2 = z1[idx], z2[idx]
        new1, new2, d_tau, d_clock, _ = _drive(
            walls, before1, before2, cfg.dt, rng
        )
        uniform = rng.random(idx.size)
        # Distances of M = p theta to the walls that can be reached; M has
        # unit diffusion coefficient on the F clock.
        m_before = _angle(walls, before1, before2) * walls.p
        m_after = _angle(walls, new1, new2) * walls.p
        gaps = []
        if dim_prime < 2:
            gaps.append((m_before, m_after))
        if dim < 2:
            edge = math.pi / 2
            gaps.append((edge - m_before, edge - m_after))
        hit = np.zeros(idx.size, dtype=bool)
        if cfg.bridge_correction:
            stay = np.ones(idx.size)
            for gap_before, gap_after in gaps:
                stay *= 1 - _bridge_cross(gap_before, gap_after, d_clock)
            hit |= uniform > stay
        else:
            shift = _MONITOR_SHIFT * np.sqrt(d_clock)
            for _, gap_after in gaps:
                hit |= gap_after <= shift
        when = tau[idx] + d_tau / 2
        landed = hit & (when <= cfg.t_max)
        times[idx[landed]] = when[landed]
        censored[idx[landed]] = False
        tau[idx] = tau[idx] + d_tau
        z1[idx], z2[idx] = new1, new2
        alive[idx[landed]] = False
        alive[idx[tau[idx] >= cfg.t_max]] = False
    raise dunkl.errors.InversionError(
        f"tau stayed below t_max={cfg.t_max} after {cap} driving steps"
    )


def sample_hitting_time(
    sys: dunkl.dihedral.DihedralSystem, cfg: SimConfig
) -> HittingSample:
    """First hitting times of the chamber boundary.

    Odd systems are simulated on the whole chamber through
    dihedral.unfolded, where both walls carry the multiplicity k. Paths
    that do not hit before t_max are censored at t_max.
    """
    dunkl.dihedral.check_point(sys, cfg.start)
    walls = dunkl.dihedral.unfolded(sys)
    phi = cfg.start.theta
    if cfg.start.r <= 0 or not 0 < phi < sys.chamber_angle:
        raise dunkl.errors.DomainError(
            "hitting times need a start strictly inside the chamber"
        )
    regime = hitting_regime(sys)
    if not regime:
        logger.warning(
            "k0=%s, k1=%s: both indices are >= 0, T0 is infinite a.s.",
            walls.k0,
            walls.k1,
        )
    tasks = [(walls, cfg, block, size) for block, size in _blocks(cfg.n_paths)]
    results = _run_blocks(_hitting_block, tasks, cfg.workers)
    return HittingSample(
        times=np.concatenate([times for times, _ in results]),
        censored=np.concatenate([flags for _, flags in results]),
        meta={
            "paths": cfg.n_paths,
            "dt": cfg.dt,
            "seed": cfg.seed,
            "t_max": cfg.t_max,
            "bridge_correction": cfg.bridge_correction,
            "hitting_regime": regime,
        },
    )


def _wedge_block(task):
    angle, start, t_max, dt, seed, bridge, block, size = task
    rng = substream(seed, _STREAM_WEDGE, block)
    normal = np.array([math.sin(angle), -math.cos(angle)])
    point = np.tile(
        [start.r * math.cos(start.theta), start.r * math.sin(start.theta)],
        (size, 1),
    )
    times = np.full(size, t_max)
    censored = np.ones(size, dtype=bool)
    alive = np.ones(size, dtype=bool)
    steps = int(round(t_max / dt))
    for step in range(steps):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        before = point[idx]
        after = before + math.sqrt(dt) * rng.standard_normal((idx.size, 2))
        uniform = rng.random(idx.size)
        stay = np.ones(idx.size)
        for gap_before, gap_after in (
            (before[:, 1], after[:, 1]),
            (before @ normal, after @ normal),
        ):
            if bridge:
                stay *= 1 - _bridge_cross(gap_before, gap_after, dt)
            else:
                stay *= gap_after > 0
        hit = uniform > stay
        times[idx[hit]] = (step + 0.5) * dt
        censored[idx[hit]] = False
        alive[idx[hit]] = False
        point[idx] = after
    return times, censored


def wedge_exit_times(
    angle: float,
    start: dunkl.dihedral.PolarPoint,
    t_max: float,
    dt: float,
    n_paths: int,
    seed: int,
    bridge_correction: bool = True,
    workers: int = 1,
) -> HittingSample:
    """Exit times of planar Brownian motion from the wedge [0, angle].

    Uses Gaussian increments only, with a Brownian-bridge correction for
    each bounding half-line.
    """
    if not 0 < start.theta < angle or start.r <= 0:
        raise dunkl.errors.DomainError("start must lie inside the wedge")
    tasks = [
        (angle, start, t_max, dt, seed, bridge_correction, block, size)
        for block, size in _blocks(n_paths)
    ]
    results = _run_blocks(_wedge_block, tasks, workers)
    return HittingSample(
        times=np.concatenate([times for times, _ in results]),
        censored=np.concatenate([flags for _, flags in results]),
        meta={
            "paths": n_paths,
            "dt": dt,
            "seed": seed,
            "t_max": t_max,
            "bridge_correction": bridge_correction,
        },
    )
