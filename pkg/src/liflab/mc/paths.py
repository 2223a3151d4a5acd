"""Path simulation of the hard-wall and random-discharge processes.

Between firing events every process follows the exact OU transition
x' = e^{-dt} x + b*N*(1 - e^{-dt}) + sqrt(a (1 - e^{-2 dt})) xi.  The hard
wall fires when a step ends at or above the threshold (crossing instant
linearly interpolated); the discharge process fires when an exponential
waiting time at the step-start rate lands inside the step.  Killed variants
stop at the first firing.

Paths are identified by (seed, path index) through counter-based streams,
so ensembles can be generated in any batch split, on any schedule, with
identical results.
"""

from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .. import backend
from ..model import DischargeSpec, Mode, RateKind

_MODE_CODE = {
    Mode.HARD_WALL_FULL: 0,
    Mode.HARD_WALL_KILLED: 1,
    Mode.DISCHARGE_FULL: 2,
    Mode.DISCHARGE_KILLED: 3,
}
_RATE_CODE = {RateKind.STEP: 0, RateKind.LINEAR_RAMP: 1}


class Terminal(enum.Enum):
    SURVIVED = "survived"
    KILLED_AT_FIRST_JUMP = "killed_at_first_jump"


@dataclass(frozen=True)
class PathRecord:
    """One simulated trajectory sampled on the step grid."""

    times: np.ndarray
    states: np.ndarray
    jump_times: np.ndarray
    terminal: Terminal

    def jump_count_at(self, t: float) -> int:
        """Number of firings up to and including t (right-continuous)."""
        return bisect_right(self.jump_times.tolist(), t)


@dataclass(frozen=True)
class CoupledSample:
    """First-jump times of the coupled hard/soft construction."""

    t_hard: float
    t_soft: float
    gamma: float


@dataclass
class PathEnsemble:
    """Summary of many paths: probe snapshots plus ragged jump times."""

    mode: Mode
    seed: int
    dt: float
    n_paths: int
    probe_times: np.ndarray
    probe_states: np.ndarray      # (n_probes, n_paths); NaN once killed
    probe_counts: np.ndarray      # (n_probes, n_paths)
    jump_times: np.ndarray        # concatenated, sorted per path
    jump_offsets: np.ndarray      # (n_paths + 1,)
    terminal: np.ndarray          # uint8, 1 where killed

    def probe_index(self, t: float) -> int:
        hits = np.nonzero(np.abs(self.probe_times - t) <= 1e-9)[0]
        if not len(hits):
            raise ValueError(f"t={t} is not one of the recorded probe times "
                             f"{self.probe_times.tolist()}")
        return int(hits[0])

    def states_at(self, t: float) -> np.ndarray:
        return self.probe_states[self.probe_index(t)]

    def counts_at(self, t: float) -> np.ndarray:
        return self.probe_counts[self.probe_index(t)]

    def path_jumps(self, i: int) -> np.ndarray:
        return self.jump_times[self.jump_offsets[i]:self.jump_offsets[i + 1]]

    def nth_jump_times(self, n: int) -> np.ndarray:
        """T_n for every path that fired at least n times."""
        if n < 1:
            raise ValueError("jump order n must be >= 1")
        counts = np.diff(self.jump_offsets)
        have = counts >= n
        return self.jump_times[self.jump_offsets[:-1][have] + n - 1]

    @staticmethod
    def merge(parts: list["PathEnsemble"]) -> "PathEnsemble":
        """Concatenate shards produced with disjoint path-index ranges."""
        first = parts[0]
        for p in parts[1:]:
            if not np.array_equal(p.probe_times, first.probe_times):
                raise ValueError("shards must share probe times")
        return PathEnsemble(
            mode=first.mode, seed=first.seed, dt=first.dt,
            n_paths=sum(p.n_paths for p in parts),
            probe_times=first.probe_times,
            probe_states=np.concatenate([p.probe_states for p in parts], axis=1),
            probe_counts=np.concatenate([p.probe_counts for p in parts], axis=1),
            jump_times=np.concatenate([p.jump_times for p in parts]),
            jump_offsets=np.concatenate(
                [first.jump_offsets[:1]]
                + [p.jump_offsets[1:] + off for p, off in
                   zip(parts, np.cumsum([0] + [len(p.jump_times) for p in parts[:-1]]))]),
            terminal=np.concatenate([p.terminal for p in parts]),
        )

    @staticmethod
    def from_records(records: list[PathRecord], probe_times,
                     mode: Mode = Mode.DISCHARGE_FULL, dt: float = 0.0) -> "PathEnsemble":
        """Build an ensemble view from individually simulated records."""
        probe_times = np.asarray(probe_times, dtype=float)
        n = len(records)
        states = np.full((len(probe_times), n), np.nan)
        counts = np.zeros((len(probe_times), n), dtype=np.int64)
        jumps, offsets = [], [0]
        terminal = np.zeros(n, dtype=np.uint8)
        for i, rec in enumerate(records):
            for p, t in enumerate(probe_times):
                j = np.searchsorted(rec.times, t + 1e-12) - 1
                if j >= 0:
                    states[p, i] = rec.states[j]
                counts[p, i] = rec.jump_count_at(t)
            jumps.extend(rec.jump_times.tolist())
            offsets.append(offsets[-1] + len(rec.jump_times))
            terminal[i] = rec.terminal is Terminal.KILLED_AT_FIRST_JUMP
        return PathEnsemble(mode=mode, seed=0, dt=dt, n_paths=n,
                            probe_times=probe_times, probe_states=states,
                            probe_counts=counts,
                            jump_times=np.asarray(jumps, dtype=float),
                            jump_offsets=np.asarray(offsets, dtype=np.int64),
                            terminal=terminal)


def _steps(dt: float, t_max: float) -> int:
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not t_max > 0:
        raise ValueError(f"t_max must be > 0, got {t_max}")
    n = int(round(t_max / dt))
    if n < 1 or abs(n * dt - t_max) > 1e-9 * max(1.0, t_max):
        raise ValueError("t_max must be a positive integer multiple of dt")
    return n


def drift_shift_from_rate(values: np.ndarray, b: float, dt: float,
                          n_steps: int) -> np.ndarray:
    """Per-step mean shift b*N_m*(1 - e^{-dt}) from a rate series.

    values must cover steps 0..n_steps-1 (extra trailing entries ignored),
    with N frozen over each step exactly as in the PDE scheme.
    """
    values = np.asarray(values, dtype=float)
    if len(values) < n_steps:
        raise ValueError("rate series shorter than the number of steps")
    return b * values[:n_steps] * (1.0 - np.exp(-dt))


def run_ensemble(spec: DischargeSpec, mode: Mode, n_paths: int, dt: float,
                 t_max: float, seed: int, probe_times=None,
                 init: str = "point", sigma0: float = 0.1,
                 first_path: int = 0, rate_override: float | None = None,
                 drift_shift: np.ndarray | None = None) -> PathEnsemble:
    """Simulate n_paths paths and summarize them at the probe times.

    init="point" starts every path at spec.x0; init="gaussian" draws the
    start from N(spec.x0, sigma0^2), matching the PDE initial datum.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if mode.hard_wall and not spec.x0 < 1.0:
        raise ValueError("hard-wall runs require x0 < 1")
    n_steps = _steps(dt, t_max)
    if probe_times is None:
        probe_times = [t_max]
    probe_times = np.asarray(sorted(probe_times), dtype=float)
    probe_steps = np.asarray([int(round(t / dt)) for t in probe_times], dtype=np.int64)
    if np.any(np.abs(probe_steps * dt - probe_times) > 1e-9) or \
            np.any(probe_steps < 0) or np.any(probe_steps > n_steps):
        raise ValueError("probe times must lie on the step grid")
    if init not in ("point", "gaussian"):
        raise ValueError(f"unknown init {init!r}")
    st, cnt, jt, jo, term = backend.paths_ensemble(
        _MODE_CODE[mode], seed, first_path, n_paths, spec.x0,
        sigma0 if init == "gaussian" else 0.0, dt, n_steps, spec.a,
        spec.delta, _RATE_CODE[spec.rate_kind], rate_override, drift_shift,
        probe_steps)
    return PathEnsemble(mode=mode, seed=seed, dt=dt, n_paths=n_paths,
                        probe_times=probe_times, probe_states=st,
                        probe_counts=cnt, jump_times=jt, jump_offsets=jo,
                        terminal=term)


def _simulate_one(spec, mode, dt, t_max, seed, path_index, rate_override,
                  drift_shift, init, sigma0) -> PathRecord:
    n_steps = _steps(dt, t_max)
    if mode.hard_wall and not spec.x0 < 1.0:
        raise ValueError("hard-wall runs require x0 < 1")
    states, jt, jo, term, kill_info = backend.paths_full(
        _MODE_CODE[mode], seed, path_index, 1, spec.x0,
        sigma0 if init == "gaussian" else 0.0, dt, n_steps, spec.a,
        spec.delta, _RATE_CODE[spec.rate_kind], rate_override, drift_shift)
    times = dt * np.arange(n_steps + 1)
    row = states[0]
    jumps = jt[jo[0]:jo[1]]
    if term[0]:
        step, t_kill, x_kill = kill_info[0]
        step = int(step)
        times = np.append(times[:step], t_kill)
        row = np.append(row[:step], x_kill)
        return PathRecord(times, row, jumps, Terminal.KILLED_AT_FIRST_JUMP)
    return PathRecord(times, row, jumps, Terminal.SURVIVED)


def simulate_hard_wall(spec: DischargeSpec, dt: float, t_max: float,
                       seed: int, path_index: int = 0,
                       drift_shift: np.ndarray | None = None,
                       init: str = "point", sigma0: float = 0.1) -> PathRecord:
    """Hard-wall path: reset to 0 whenever a step ends at or above 1."""
    return _simulate_one(spec, Mode.HARD_WALL_FULL, dt, t_max, seed,
                         path_index, None, drift_shift, init, sigma0)


def simulate_discharge(spec: DischargeSpec, dt: float, t_max: float,
                       seed: int, path_index: int = 0,
                       rate_override: float | None = None,
                       drift_shift: np.ndarray | None = None,
                       init: str = "point", sigma0: float = 0.1) -> PathRecord:
    """Random-discharge path firing at rate lambda^delta, reset to 0."""
    return _simulate_one(spec, Mode.DISCHARGE_FULL, dt, t_max, seed,
                         path_index, rate_override, drift_shift, init, sigma0)


def simulate_killed_discharge(spec: DischargeSpec, dt: float, t_max: float,
                              seed: int, path_index: int = 0,
                              rate_override: float | None = None,
                              drift_shift: np.ndarray | None = None,
                              init: str = "point", sigma0: float = 0.1) -> PathRecord:
    """Discharge path stopped at its first firing time."""
    return _simulate_one(spec, Mode.DISCHARGE_KILLED, dt, t_max, seed,
                         path_index, rate_override, drift_shift, init, sigma0)


def simulate_killed_hard_wall(spec: DischargeSpec, dt: float, t_max: float,
                              seed: int, path_index: int = 0,
                              drift_shift: np.ndarray | None = None,
                              init: str = "point", sigma0: float = 0.1) -> PathRecord:
    """Hard-wall path stopped at its first threshold crossing."""
    return _simulate_one(spec, Mode.HARD_WALL_KILLED, dt, t_max, seed,
                         path_index, None, drift_shift, init, sigma0)


@dataclass
class CoupledEnsemble:
    t_hard: np.ndarray
    t_soft: np.ndarray
    gamma: np.ndarray

    def __len__(self):
        return len(self.t_hard)

    def sample(self, i: int) -> CoupledSample:
        return CoupledSample(float(self.t_hard[i]), float(self.t_soft[i]),
                             float(self.gamma[i]))


def run_coupled_ensemble(delta: float, n_samples: int, dt: float,
                         t_max: float, seed: int,
                         rate_kind: RateKind = RateKind.STEP,
                         first_path: int = 0,
                         gamma_override=None) -> CoupledEnsemble:
    """Coupled first-jump samples; both times start the same OU path at 0.

    t_hard is the first threshold crossing, t_soft the first time the
    running integral of lambda^delta along the same path exceeds an
    independent Exp(1) clock.  Censored entries are +inf.
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n_steps = _steps(dt, t_max)
    th, ts, g = backend.coupled_run(seed, first_path, n_samples, dt, n_steps,
                                    delta, _RATE_CODE[rate_kind], gamma_override)
    return CoupledEnsemble(th, ts, g)


def simulate_coupled_first_jumps(delta: float, dt: float, t_max: float,
                                 seed: int, path_index: int = 0,
                                 rate_kind: RateKind = RateKind.STEP,
                                 gamma: float | None = None) -> CoupledSample:
    ens = run_coupled_ensemble(
        delta, 1, dt, t_max, seed, rate_kind, first_path=path_index,
        gamma_override=None if gamma is None else np.asarray([gamma]))
    return ens.sample(0)
