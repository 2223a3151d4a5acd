"""Backend selection: compiled kernels when importable, numpy otherwise.

Set LIFLAB_NO_EXTENSION=1 to force the numpy fallback.  Both backends
implement identical integer random streams; floating-point trajectories can
differ in the last few ulps because libm and numpy round transcendental
functions differently, but each backend is bit-reproducible on its own.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _numpy_backend

_REQUIRED = ("fp_run", "paths_ensemble", "paths_full", "coupled_run")

_kernels = None
if not os.environ.get("LIFLAB_NO_EXTENSION"):
    try:
        from . import _kernels  # type: ignore[no-redef]
    except ImportError:
        _kernels = None
    else:
        if not all(hasattr(_kernels, f) for f in _REQUIRED):
            _kernels = None

BACKEND = "compiled" if _kernels is not None else "numpy"


def backend_name() -> str:
    return BACKEND


@dataclass
class FpRunResult:
    q: np.ndarray
    n_series: np.ndarray
    mass_series: np.ndarray
    snaps: np.ndarray
    probes: np.ndarray
    min_density: float
    n_clamped: int
    min_n_raw: float
    max_mass_rise: float


def fp_run(op, q0, n_steps, snap_steps=(), probe_weights=None) -> FpRunResult:
    """Advance the semi-implicit scheme; op is a SchemeOperator."""
    snap_steps = np.asarray(snap_steps, dtype=np.int64)
    if probe_weights is None:
        probe_weights = np.empty((0, len(q0)))
    probe_weights = np.ascontiguousarray(probe_weights, dtype=float)
    if _kernels is not None:
        out = _kernels.fp_run(
            np.ascontiguousarray(q0, dtype=float), int(n_steps),
            op.tau, op.grid.h, op.spec.a, op.spec.b,
            np.ascontiguousarray(op.lam), np.ascontiguousarray(op.beta),
            np.ascontiguousarray(op.w_half),
            np.ascontiguousarray(op.x_nodes), np.ascontiguousarray(op.x_half),
            np.ascontiguousarray(op.mass_w), np.ascontiguousarray(op.nvec),
            int(op.grid.reset_index), int(op.last_active),
            bool(op.source_on), snap_steps, probe_weights)
    else:
        out = _numpy_backend.fp_run(op, q0, int(n_steps), snap_steps, probe_weights)
    return FpRunResult(*out)


def paths_ensemble(mode, seed, first_path, n_paths, x0, sigma0, dt, n_steps,
                   a, delta, rate_kind, rate_override, shift, probe_steps):
    args = _mc_args(mode, seed, first_path, n_paths, x0, sigma0, dt, n_steps,
                    a, delta, rate_kind, rate_override, shift)
    probe_steps = np.asarray(probe_steps, dtype=np.int64)
    impl = _kernels.paths_ensemble if _kernels is not None else _numpy_backend.paths_ensemble
    return impl(*args, probe_steps)


def paths_full(mode, seed, first_path, n_paths, x0, sigma0, dt, n_steps,
               a, delta, rate_kind, rate_override, shift):
    args = _mc_args(mode, seed, first_path, n_paths, x0, sigma0, dt, n_steps,
                    a, delta, rate_kind, rate_override, shift)
    impl = _kernels.paths_full if _kernels is not None else _numpy_backend.paths_full
    return impl(*args)


def coupled_run(seed, first_path, n_samples, dt, n_steps, delta, rate_kind,
                gamma_override=None):
    if gamma_override is not None:
        gamma_override = np.ascontiguousarray(gamma_override, dtype=float)
        if len(gamma_override) != n_samples:
            raise ValueError("gamma_override length must equal n_samples")
    impl = _kernels.coupled_run if _kernels is not None else _numpy_backend.coupled_run
    return impl(int(seed), int(first_path), int(n_samples), float(dt),
                int(n_steps), float(delta), int(rate_kind), gamma_override)


def _mc_args(mode, seed, first_path, n_paths, x0, sigma0, dt, n_steps,
             a, delta, rate_kind, rate_override, shift):
    if shift is not None:
        shift = np.ascontiguousarray(shift, dtype=float)
        if len(shift) != n_steps:
            raise ValueError("drift shift series must have one entry per step")
    rate_override = np.nan if rate_override is None else float(rate_override)
    return (int(mode), int(seed), int(first_path), int(n_paths), float(x0),
            float(sigma0), float(dt), int(n_steps), float(a), float(delta),
            int(rate_kind), rate_override, shift)
