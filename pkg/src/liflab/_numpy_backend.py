"""Pure numpy implementation of the hot kernels.

This is the fallback used when the compiled extension is unavailable (or
disabled via LIFLAB_NO_EXTENSION).  It implements exactly the same stream
layout and stepping rules as the compiled kernels, vectorized across paths;
per-path results are independent of batch composition.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from . import streams
from .fp.scheme import SchemeOperator

_BATCH = 8192

MODE_HW_FULL = 0
MODE_HW_KILLED = 1
MODE_DIS_FULL = 2
MODE_DIS_KILLED = 3

RATE_STEP = 0
RATE_RAMP = 1


def _rate(x: np.ndarray, delta: float, rate_kind: int, rate_override: float) -> np.ndarray:
    if rate_override == rate_override:  # not NaN
        return np.full_like(x, rate_override)
    if rate_kind == RATE_STEP:
        return np.where(x >= 1.0, 1.0 / delta, 0.0)
    return np.where(x <= 1.0, 0.0, np.clip((x - 1.0) / delta**2, None, 1.0 / delta))


def paths_ensemble(mode, seed, first_path, n_paths, x0, sigma0, dt, n_steps,
                   a, delta, rate_kind, rate_override, shift, probe_steps):
    """Simulate paths, recording state and jump count at the probe steps.

    Returns (probe_states, probe_counts, jump_times, jump_offsets, terminal).
    Probe states of killed paths are NaN from the kill step onward.
    """
    probe_steps = np.asarray(probe_steps, dtype=np.int64)
    k = len(probe_steps)
    probe_states = np.empty((k, n_paths))
    probe_counts = np.zeros((k, n_paths), dtype=np.int64)
    terminal = np.zeros(n_paths, dtype=np.uint8)
    jump_lists: list[np.ndarray] = []
    jump_owner: list[np.ndarray] = []

    killed_mode = mode in (MODE_HW_KILLED, MODE_DIS_KILLED)
    discharge = mode in (MODE_DIS_FULL, MODE_DIS_KILLED)
    decay = np.exp(-dt)
    sd = np.sqrt(a * (1.0 - decay * decay))
    shift = np.zeros(n_steps) if shift is None else np.asarray(shift, dtype=float)

    for lo in range(0, n_paths, _BATCH):
        hi = min(lo + _BATCH, n_paths)
        idx = np.arange(first_path + lo, first_path + hi, dtype=np.uint64)
        nb = hi - lo
        noise = streams.normals_for_paths(seed, idx, n_steps)
        if discharge:
            thin = streams.thinning_uniforms(seed, idx, n_steps)
        x = np.full(nb, float(x0))
        if sigma0 > 0.0:
            x = x + sigma0 * streams.initial_normals(seed, idx)
        counts = np.zeros(nb, dtype=np.int64)
        alive = np.ones(nb, dtype=bool)
        kill_state = np.full(nb, np.nan)
        p = 0
        while p < k and probe_steps[p] == 0:
            probe_states[p, lo:hi] = x
            p += 1
        for m in range(n_steps):
            t = m * dt
            if discharge:
                lam = _rate(x, delta, rate_kind, rate_override)
                hot = alive & (lam > 0.0)
                wait = np.full(nb, np.inf)
                if np.any(hot):
                    wait[hot] = -np.log(thin[hot, m]) / lam[hot]
                fired = wait < dt
                t_fire = t + wait
            x_new = decay * x + shift[m] + sd * noise[:, m]
            if discharge:
                if np.any(fired):
                    jump_lists.append(t_fire[fired])
                    jump_owner.append(np.nonzero(fired)[0] + lo)
                    counts[fired] += 1
                    if killed_mode:
                        kill_state[fired] = x[fired]
                        alive[fired] = False
                    else:
                        x_new[fired] = 0.0
            else:
                crossed = alive & (x_new >= 1.0)
                if np.any(crossed):
                    theta = (1.0 - x[crossed]) / (x_new[crossed] - x[crossed])
                    jump_lists.append(t + dt * theta)
                    jump_owner.append(np.nonzero(crossed)[0] + lo)
                    counts[crossed] += 1
                    if killed_mode:
                        kill_state[crossed] = 1.0
                        alive[crossed] = False
                    else:
                        x_new[crossed] = 0.0
            if killed_mode:
                x = np.where(alive, x_new, np.nan)
            else:
                x = x_new
            while p < k and probe_steps[p] == m + 1:
                probe_states[p, lo:hi] = x
                probe_counts[p, lo:hi] = counts
                p += 1
        if killed_mode:
            terminal[lo:hi] = (~alive).astype(np.uint8)

    jump_times, jump_offsets = _ragged(jump_lists, jump_owner, n_paths)
    return probe_states, probe_counts, jump_times, jump_offsets, terminal


def paths_full(mode, seed, first_path, n_paths, x0, sigma0, dt, n_steps,
               a, delta, rate_kind, rate_override, shift):
    """Like paths_ensemble but records the state after every step.

    Returns (states, jump_times, jump_offsets, terminal, kill_info) where
    states has shape (n_paths, n_steps + 1) and kill_info is an array of
    (kill_step, kill_time, kill_state) rows, NaN-filled for survivors.
    """
    probe_steps = np.arange(n_steps + 1, dtype=np.int64)
    killed_mode = mode in (MODE_HW_KILLED, MODE_DIS_KILLED)
    st, _cnt, jt, jo, term = paths_ensemble(
        mode, seed, first_path, n_paths, x0, sigma0, dt, n_steps,
        a, delta, rate_kind, rate_override, shift, probe_steps)
    states = st.T.copy()
    kill_info = np.full((n_paths, 3), np.nan)
    if killed_mode:
        for i in range(n_paths):
            if term[i]:
                t_kill = jt[jo[i]]
                step = int(np.ceil(t_kill / dt - 1e-9))
                pre = states[i, step - 1] if step >= 1 else states[i, 0]
                if mode == MODE_HW_KILLED:
                    kill_info[i] = (step, t_kill, 1.0)
                else:
                    kill_info[i] = (step, t_kill, pre)
    return states, jt, jo, term, kill_info


def coupled_run(seed, first_path, n_samples, dt, n_steps, delta, rate_kind,
                gamma_override=None):
    """Coupled first-jump construction on one shared OU path per sample.

    Returns (t_hard, t_soft, gamma); entries are +inf when censored at the
    horizon.  gamma == 0 is resolved as t_soft = t_hard (the zero clock
    fires at the first positive occupation above the threshold).
    """
    t_hard = np.full(n_samples, np.inf)
    t_soft = np.full(n_samples, np.inf)
    gam = np.empty(n_samples)
    decay = np.exp(-dt)
    sd = np.sqrt(1.0 - decay * decay)
    for lo in range(0, n_samples, _BATCH):
        hi = min(lo + _BATCH, n_samples)
        idx = np.arange(first_path + lo, first_path + hi, dtype=np.uint64)
        nb = hi - lo
        noise = streams.normals_for_paths(seed, idx, n_steps)
        if gamma_override is None:
            g = streams.exponential_clocks(seed, idx)
        else:
            g = np.asarray(gamma_override, dtype=float)[lo:hi].copy()
        gam[lo:hi] = g
        x = np.zeros(nb)
        acc = np.zeros(nb)
        th = np.full(nb, np.inf)
        ts = np.full(nb, np.inf)
        for m in range(n_steps):
            t = m * dt
            lam = _rate(x, delta, rate_kind, np.nan)
            live = ~np.isfinite(ts) & (lam > 0.0)
            if np.any(live):
                hit = live & (acc + lam * dt >= g)
                if np.any(hit):
                    ts[hit] = t + (g[hit] - acc[hit]) / lam[hit]
                acc[live] += lam[live] * dt
            x_new = decay * x + sd * noise[:, m]
            fresh = ~np.isfinite(th) & (x_new >= 1.0)
            if np.any(fresh):
                theta = (1.0 - x[fresh]) / (x_new[fresh] - x[fresh])
                th[fresh] = t + dt * theta
            x = x_new
        zero_clock = gam[lo:hi] <= 0.0
        ts[zero_clock] = th[zero_clock]
        t_hard[lo:hi] = th
        t_soft[lo:hi] = ts
    return t_hard, t_soft, gam


def _ragged(chunks, owners, n_paths):
    """Assemble per-step jump fragments into per-path sorted ragged storage."""
    if chunks:
        times = np.concatenate(chunks)
        owner = np.concatenate(owners)
    else:
        times = np.empty(0)
        owner = np.empty(0, dtype=np.int64)
    order = np.lexsort((times, owner))
    times = times[order]
    owner = owner[order]
    offsets = np.zeros(n_paths + 1, dtype=np.int64)
    np.add.at(offsets, owner + 1, 1)
    np.cumsum(offsets, out=offsets)
    return times, offsets


def fp_run(op: SchemeOperator, q0, n_steps, snap_steps, probe_weights):
    """Advance the semi-implicit scheme n_steps times.

    Returns (q, n_series, mass_series, snaps, probes, min_density,
    n_clamped, min_n_raw, max_mass_rise).
    """
    from .fp.scheme import assemble  # local import keeps module load light

    q = np.array(q0, dtype=float)
    n = q.shape[0]
    snap_steps = np.asarray(snap_steps, dtype=np.int64)
    snaps = np.empty((len(snap_steps), n))
    probes = np.empty((len(probe_weights), n_steps + 1))
    n_series = np.empty(n_steps + 1)
    mass_series = np.empty(n_steps + 1)
    mass_series[0] = op.mass_w @ q
    if len(probe_weights):
        probes[:, 0] = probe_weights @ q
    s = 0
    while s < len(snap_steps) and snap_steps[s] == 0:
        snaps[s] = q
        s += 1
    min_density = float(q.min())
    n_clamped = 0
    min_n_raw = np.inf
    max_mass_rise = -np.inf
    for m in range(n_steps):
        n_raw = float(op.nvec @ q)
        min_n_raw = min(min_n_raw, n_raw)
        if n_raw < 0.0:
            n_clamped += 1
            n_used = 0.0
        else:
            n_used = n_raw
        n_series[m] = n_used
        lower, diag, upper, rhs = assemble(op, q, n_used)
        ab = np.zeros((3, n))
        ab[0, 1:] = upper[:-1]
        ab[1] = diag
        ab[2, :-1] = lower[1:]
        q = solve_banded((1, 1), ab, rhs, overwrite_ab=True, overwrite_b=True,
                         check_finite=False)
        if not np.all(np.isfinite(q)):
            raise FloatingPointError(f"solver produced non-finite density at step {m}")
        mass_series[m + 1] = op.mass_w @ q
        max_mass_rise = max(max_mass_rise, mass_series[m + 1] - mass_series[m])
        min_density = min(min_density, float(q.min()))
        if len(probe_weights):
            probes[:, m + 1] = probe_weights @ q
        while s < len(snap_steps) and snap_steps[s] == m + 1:
            snaps[s] = q
            s += 1
    n_raw = float(op.nvec @ q)
    min_n_raw = min(min_n_raw, n_raw)
    if n_raw < 0.0:
        n_clamped += 1
        n_series[n_steps] = 0.0
    else:
        n_series[n_steps] = n_raw
    return (q, n_series, mass_series, snaps, probes,
            min_density, n_clamped, float(min_n_raw), float(max_mass_rise))
