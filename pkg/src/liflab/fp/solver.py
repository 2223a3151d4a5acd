"""Semi-implicit finite-volume solves of the four Fokker-Planck variants.

Modes:
  DISCHARGE_FULL    density of the random-discharge process: sink -lam*q plus
                    a reset source of strength N(t) = integral of lam*f.
  DISCHARGE_KILLED  same sink, no source; mass = survival probability.
  HARD_WALL_FULL    absorbing node at the threshold, source of strength
                    N(t) = -a d_x f(1-, t) at the reset node.
  HARD_WALL_KILLED  absorbing node only.

The density is advanced implicitly; the firing rate (and the Gaussian flux
weight it enters through) is frozen at the previous step.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .. import backend
from ..model import DischargeSpec, Mode
from .grid import LogisticGrid, build_logistic_grid, logistic_map
from .scheme import SchemeOperator, assemble, boundary_outflux, build_operator


@dataclass(frozen=True)
class SolverConfig:
    spec: DischargeSpec
    mode: Mode
    n_cells: int = 1024
    tau: float = 1e-3
    t_max: float = 1.0
    x_min: float = -4.0
    x_max: float = 4.0
    x0: float = -1.0       # center of the Gaussian initial datum
    sigma0: float = 0.1    # its standard deviation
    rate_override: float | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be > 0, got {self.t_max}")
        if self.n_cells < 16:
            raise ValueError(f"n_cells must be >= 16, got {self.n_cells}")
        if not self.sigma0 > 0:
            raise ValueError("sigma0 must be > 0")

    def build_grid(self) -> LogisticGrid:
        return build_logistic_grid(self.x_min, self.x_max, self.n_cells)

    def build_operator(self, grid: LogisticGrid | None = None) -> SchemeOperator:
        grid = grid or self.build_grid()
        return build_operator(grid, self.spec, self.mode, self.tau,
                              self.rate_override)

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_max / self.tau))
        if abs(n * self.tau - self.t_max) > 1e-9 * max(1.0, self.t_max):
            raise ValueError("t_max must be an integer multiple of tau")
        return n


@dataclass(frozen=True)
class FiringSeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise ValueError("times and values must align")
        if len(self.values) and self.values.min() < 0:
            raise ValueError("firing rate values must be >= 0")

    def truncated(self, t: float) -> "FiringSeries":
        keep = self.times <= t + 1e-12
        return FiringSeries(self.times[keep], self.values[keep])


@dataclass
class DensityState:
    """Grid density in logistic coordinates at one time."""

    q: np.ndarray
    t: float
    firing_history: FiringSeries = field(
        default_factory=lambda: FiringSeries(np.empty(0), np.empty(0)))


@dataclass
class SolveResult:
    config: SolverConfig
    grid: LogisticGrid
    snapshots: list[DensityState]
    firing: FiringSeries
    mass_series: np.ndarray
    probe_x: np.ndarray
    probe_cdf: np.ndarray            # shape (len(probe_x), n_steps + 1)
    min_density: float
    n_clamped: int
    min_n_raw: float
    max_mass_rise: float

    @property
    def final(self) -> DensityState:
        return self.snapshots[-1]

    @property
    def mass_initial(self) -> float:
        return float(self.mass_series[0])

    @property
    def mass_final(self) -> float:
        return float(self.mass_series[-1])


def gaussian_initial(grid: LogisticGrid, config: SolverConfig) -> np.ndarray:
    """Initial Gaussian datum evaluated on the nodes, pinned at boundaries."""
    x = grid.x_nodes
    q = np.exp(-((x - config.x0) ** 2) / (2.0 * config.sigma0**2))
    q /= np.sqrt(2.0 * np.pi) * config.sigma0
    q[0] = 0.0
    q[-1] = 0.0
    if config.mode.hard_wall:
        q[grid.wall_index:] = 0.0
    return q


def thomas_solve(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray,
                 rhs: np.ndarray) -> np.ndarray:
    """Solve the tridiagonal system by elimination (LAPACK gtsv).

    lower[j], diag[j], upper[j] multiply u[j-1], u[j], u[j+1] in row j;
    lower[0] and upper[-1] are ignored.
    """
    n = len(diag)
    if not (len(lower) == len(upper) == len(rhs) == n):
        raise ValueError("tridiagonal bands must have equal length")
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    try:
        return solve_banded((1, 1), ab, rhs, overwrite_ab=True,
                            check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise FloatingPointError(f"tridiagonal solve failed: {exc}") from exc


def firing_rate_quadrature(state: DensityState, grid: LogisticGrid,
                           spec: DischargeSpec,
                           rate_override: float | None = None) -> float:
    """Discrete firing rate h * sum_j g'(y_j) lambda(x_j) q_j."""
    from .scheme import rate_on_nodes

    lam = rate_on_nodes(grid.x_nodes, spec, rate_override)
    return float(grid.h * np.sum(grid.metric_nodes * lam * state.q))


def assemble_sg_system(state: DensityState, n_prev: float,
                       config: SolverConfig):
    """Public assembly of the implicit step (lower, diag, upper, rhs)."""
    op = config.build_operator()
    return assemble(op, state.q, n_prev)


def step_semi_implicit(state: DensityState, config: SolverConfig,
                       op: SchemeOperator | None = None):
    """One semi-implicit step; returns (new state, N used for the step)."""
    op = op or config.build_operator()
    n_raw = float(op.nvec @ state.q)
    n_used = max(n_raw, 0.0)
    lower, diag, upper, rhs = assemble(op, state.q, n_used)
    q_new = thomas_solve(lower, diag, upper, rhs)
    hist = state.firing_history
    new_hist = FiringSeries(np.append(hist.times, state.t),
                            np.append(hist.values, n_used))
    return DensityState(q_new, state.t + config.tau, new_hist), n_used


def total_mass(state: DensityState, grid: LogisticGrid) -> float:
    """h * sum_j g'(y_j) q_j, the physical integral of the density."""
    return float(grid.h * np.sum(grid.metric_nodes * state.q))


def interp_density(state: DensityState, grid: LogisticGrid, x: float) -> float:
    """Linear interpolation of the physical density at x."""
    xn = grid.x_nodes
    if not (xn[0] <= x <= xn[-1]):
        raise ValueError(f"x={x} outside the solver domain "
                         f"[{xn[0]:.6g}, {xn[-1]:.6g}]")
    y = float(logistic_map(x))
    pos = (y - grid.y_nodes[0]) / grid.h
    j = min(int(pos), grid.n_cells - 1)
    frac = pos - j
    return float((1.0 - frac) * state.q[j] + frac * state.q[j + 1])


def cdf_weights(grid: LogisticGrid, probe_x: np.ndarray) -> np.ndarray:
    """Rows w_p with w_p @ q = cumulative mass up to probe_x[p].

    The cumulative function uses the same node quadrature as total_mass,
    linearly interpolated between nodes.
    """
    probe_x = np.asarray(probe_x, dtype=float)
    w = np.zeros((len(probe_x), grid.n_nodes))
    cellw = grid.h * grid.metric_nodes
    y = logistic_map(probe_x)
    for p, yp in enumerate(y):
        if yp <= grid.y_nodes[0]:
            continue
        pos = (yp - grid.y_nodes[0]) / grid.h
        j = min(int(pos), grid.n_cells - 1)
        frac = min(pos - j, 1.0)
        w[p, :j + 1] = cellw[:j + 1]
        w[p, j + 1] = frac * cellw[j + 1]
    return w


def cdf_on_grid(state: DensityState, grid: LogisticGrid) -> np.ndarray:
    """Cumulative mass at every node (same quadrature as total_mass)."""
    return np.cumsum(grid.h * grid.metric_nodes * state.q)


def _solve(config: SolverConfig, snapshot_times, probe_x) -> SolveResult:
    grid = config.build_grid()
    op = config.build_operator(grid)
    q0 = gaussian_initial(grid, config)
    n_steps = config.n_steps
    if snapshot_times is None:
        snapshot_times = [config.t_max]
    snap_steps = _steps_for(snapshot_times, config.tau, n_steps)
    probe_x = np.asarray([] if probe_x is None else probe_x, dtype=float)
    weights = cdf_weights(grid, probe_x) if len(probe_x) else None
    out = backend.fp_run(op, q0, n_steps, snap_steps, weights)
    times = config.tau * np.arange(n_steps + 1)
    firing = FiringSeries(times, out.n_series)
    snapshots = [
        DensityState(out.snaps[i], float(snapshot_times[i]),
                     firing.truncated(float(snapshot_times[i])))
        for i in range(len(snap_steps))
    ]
    return SolveResult(
        config=config, grid=grid, snapshots=snapshots, firing=firing,
        mass_series=out.mass_series, probe_x=probe_x, probe_cdf=out.probes,
        min_density=out.min_density, n_clamped=out.n_clamped,
        min_n_raw=out.min_n_raw, max_mass_rise=out.max_mass_rise)


def _steps_for(ts, tau, n_steps):
    steps = []
    for t in ts:
        m = int(round(t / tau))
        if abs(m * tau - t) > 1e-9 or not (0 <= m <= n_steps):
            raise ValueError(f"snapshot time {t} is not on the step grid")
        steps.append(m)
    if steps != sorted(steps):
        raise ValueError("snapshot times must be increasing")
    return np.asarray(steps, dtype=np.int64)


def solve_discharge_fp(config: SolverConfig, snapshot_times=None,
                       probe_x=None) -> SolveResult:
    if config.mode.hard_wall:
        raise ValueError("solve_discharge_fp requires a discharge mode")
    return _solve(config, snapshot_times, probe_x)


def solve_hard_wall_fp(config: SolverConfig, snapshot_times=None,
                       probe_x=None) -> SolveResult:
    if not config.mode.hard_wall:
        raise ValueError("solve_hard_wall_fp requires a hard-wall mode")
    return _solve(config, snapshot_times, probe_x)


def mass_step_identity_residual(config: SolverConfig, state: DensityState):
    """Residual of the exact per-step mass balance, for diagnostics/tests.

    mass(q') - mass(q) = tau * (N_source - sink(q') - outflux(q')) holds to
    roundoff; the returned tuple is (residual, drift) with drift the
    signed per-step mass change.
    """
    op = config.build_operator()
    n_raw = float(op.nvec @ state.q)
    n_used = max(n_raw, 0.0)
    new_state, _ = step_semi_implicit(state, config, op)
    grid = config.build_grid()
    dm = total_mass(new_state, grid) - total_mass(state, grid)
    sink = float((op.mass_w * op.lam) @ new_state.q)
    source = n_used if op.source_on else 0.0
    flux = boundary_outflux(op, new_state.q, n_used)
    residual = dm - config.tau * (source - sink - flux)
    return residual, dm


__all__ = [
    "SolverConfig", "FiringSeries", "DensityState", "SolveResult",
    "gaussian_initial", "thomas_solve", "firing_rate_quadrature",
    "assemble_sg_system", "step_semi_implicit", "total_mass",
    "interp_density", "cdf_weights", "cdf_on_grid",
    "solve_discharge_fp", "solve_hard_wall_fp",
    "mass_step_identity_residual", "replace",
]
