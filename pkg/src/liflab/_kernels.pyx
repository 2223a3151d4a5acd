# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: counter-based streams, path simulation, FP stepping.

Semantics mirror liflab._numpy_backend exactly; the integer streams are
bit-identical, floating point may differ in the last ulps through libm.
"""

from libc.math cimport cos, exp, isfinite, log, sin, sqrt
from libc.stdint cimport int64_t, uint8_t, uint64_t

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double PI = 3.141592653589793
cdef double INV53 = 1.0 / 9007199254740992.0
cdef uint64_t GOLD = 0x9E3779B97F4A7C15UL
cdef uint64_t LANE_SALT = 0xD1342543DE82EF95UL

DEF MODE_HW_FULL = 0
DEF MODE_HW_KILLED = 1
DEF MODE_DIS_FULL = 2
DEF MODE_DIS_KILLED = 3
DEF RATE_STEP = 0


cdef inline uint64_t mix64(uint64_t z) nogil:
    z ^= z >> 30
    z *= 0xBF58476D1CE4E5B9UL
    z ^= z >> 27
    z *= 0x94D049BB133111EBUL
    z ^= z >> 31
    return z


cdef inline uint64_t stream_root(uint64_t seed, uint64_t path, uint64_t lane) nogil:
    cdef uint64_t r = mix64(seed)
    r = mix64(r ^ (GOLD * (path + 1UL)))
    r = mix64(r ^ (LANE_SALT * (lane + 1UL)))
    return r


cdef inline uint64_t raw_word(uint64_t root, uint64_t slot) nogil:
    return mix64(root + GOLD * (slot + 1UL))


cdef inline double unit_open(uint64_t w) nogil:
    return (<double>((w >> 11) + 1UL)) * INV53


cdef inline double rate_at(double x, double delta, int rate_kind,
                           double rate_override) nogil:
    cdef double r
    if rate_override == rate_override:  # not NaN
        return rate_override
    if rate_kind == RATE_STEP:
        return 1.0 / delta if x >= 1.0 else 0.0
    if x <= 1.0:
        return 0.0
    r = (x - 1.0) / (delta * delta)
    if r > 1.0 / delta:
        r = 1.0 / delta
    return r


cdef struct NormalStream:
    uint64_t root
    int parity
    double cached


cdef inline double next_normal(NormalStream* ns, int m) nogil:
    """Normal for step m; pair (2k, 2k+1) built from slots (2k, 2k+1)."""
    cdef double u1, u2, r
    if ns.parity == 0:
        u1 = unit_open(raw_word(ns.root, <uint64_t>m))
        u2 = unit_open(raw_word(ns.root, <uint64_t>(m + 1)))
        r = sqrt(-2.0 * log(u1))
        ns.cached = r * sin(2.0 * PI * u2)
        ns.parity = 1
        return r * cos(2.0 * PI * u2)
    ns.parity = 0
    return ns.cached


def paths_ensemble(int mode, object seed, object first_path, int n_paths,
                   double x0, double sigma0, double dt, int n_steps,
                   double a, double delta, int rate_kind, double rate_override,
                   object shift, object probe_steps):
    cdef cnp.ndarray[double, ndim=1] shift_arr
    if shift is None:
        shift_arr = np.zeros(n_steps)
    else:
        shift_arr = np.ascontiguousarray(shift, dtype=np.float64)
    cdef cnp.ndarray[int64_t, ndim=1] probes = np.ascontiguousarray(probe_steps, dtype=np.int64)
    cdef int k = probes.shape[0]
    cdef cnp.ndarray[double, ndim=2] probe_states = np.empty((k, n_paths))
    cdef cnp.ndarray[int64_t, ndim=2] probe_counts = np.zeros((k, n_paths), dtype=np.int64)
    cdef cnp.ndarray[uint8_t, ndim=1] terminal = np.zeros(n_paths, dtype=np.uint8)
    cdef cnp.ndarray[int64_t, ndim=1] offsets = np.zeros(n_paths + 1, dtype=np.int64)
    cdef cnp.ndarray[double, ndim=1] jumps = np.empty(max(4 * n_paths, 64))
    cdef int64_t n_jumps = 0

    cdef uint64_t seed_u = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t first = <uint64_t>(int(first_path))
    cdef bint killed = mode == MODE_HW_KILLED or mode == MODE_DIS_KILLED
    cdef bint discharge = mode == MODE_DIS_FULL or mode == MODE_DIS_KILLED
    cdef double decay = exp(-dt)
    cdef double sd = sqrt(a * (1.0 - decay * decay))

    cdef NormalStream ns
    cdef uint64_t root1, root2
    cdef int i, m, p
    cdef double x, x_new, xi, lam, wait, t, theta, u
    cdef int64_t count
    cdef bint alive
    cdef double nan = float("nan")

    for i in range(n_paths):
        ns.root = stream_root(seed_u, first + <uint64_t>i, 0UL)
        ns.parity = 0
        root1 = stream_root(seed_u, first + <uint64_t>i, 1UL)
        root2 = stream_root(seed_u, first + <uint64_t>i, 2UL)
        x = x0
        if sigma0 > 0.0:
            u = unit_open(raw_word(root2, 0UL))
            x = x0 + sigma0 * sqrt(-2.0 * log(u)) * cos(
                2.0 * PI * unit_open(raw_word(root2, 1UL)))
        count = 0
        alive = True
        p = 0
        while p < k and probes[p] == 0:
            probe_states[p, i] = x
            p += 1
        if n_jumps + n_steps + 4 > jumps.shape[0]:
            jumps = np.resize(jumps, 2 * (n_jumps + n_steps + 4))
        for m in range(n_steps):
            t = m * dt
            xi = next_normal(&ns, m)
            if not alive:
                while p < k and probes[p] == m + 1:
                    probe_states[p, i] = nan
                    probe_counts[p, i] = count
                    p += 1
                continue
            if discharge:
                lam = rate_at(x, delta, rate_kind, rate_override)
                if lam > 0.0:
                    u = unit_open(raw_word(root1, <uint64_t>m))
                    wait = -log(u) / lam
                else:
                    wait = dt + 1.0
            x_new = decay * x + shift_arr[m] + sd * xi
            if discharge:
                if wait < dt:
                    jumps[n_jumps] = t + wait
                    n_jumps += 1
                    count += 1
                    if killed:
                        alive = False
                        x_new = nan
                    else:
                        x_new = 0.0
            else:
                if x_new >= 1.0:
                    theta = (1.0 - x) / (x_new - x)
                    jumps[n_jumps] = t + dt * theta
                    n_jumps += 1
                    count += 1
                    if killed:
                        alive = False
                        x_new = nan
                    else:
                        x_new = 0.0
            x = x_new
            while p < k and probes[p] == m + 1:
                probe_states[p, i] = x
                probe_counts[p, i] = count
                p += 1
        offsets[i + 1] = n_jumps
        if killed and not alive:
            terminal[i] = 1
    return (probe_states, probe_counts, np.array(jumps[:n_jumps]), offsets, terminal)


def paths_full(int mode, object seed, object first_path, int n_paths,
               double x0, double sigma0, double dt, int n_steps,
               double a, double delta, int rate_kind, double rate_override,
               object shift):
    """Full per-step recording; see _numpy_backend.paths_full."""
    probe_steps = np.arange(n_steps + 1, dtype=np.int64)
    st, _cnt, jt, jo, term = paths_ensemble(
        mode, seed, first_path, n_paths, x0, sigma0, dt, n_steps,
        a, delta, rate_kind, rate_override, shift, probe_steps)
    states = np.ascontiguousarray(st.T)
    kill_info = np.full((n_paths, 3), np.nan)
    killed = mode == MODE_HW_KILLED or mode == MODE_DIS_KILLED
    if killed:
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


def coupled_run(object seed, object first_path, int n_samples, double dt,
                int n_steps, double delta, int rate_kind, object gamma_override):
    cdef cnp.ndarray[double, ndim=1] t_hard = np.full(n_samples, np.inf)
    cdef cnp.ndarray[double, ndim=1] t_soft = np.full(n_samples, np.inf)
    cdef cnp.ndarray[double, ndim=1] gam = np.empty(n_samples)
    cdef cnp.ndarray[double, ndim=1] gov
    cdef bint has_override = gamma_override is not None
    if has_override:
        gov = np.ascontiguousarray(gamma_override, dtype=np.float64)

    cdef uint64_t seed_u = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t first = <uint64_t>(int(first_path))
    cdef double decay = exp(-dt)
    cdef double sd = sqrt(1.0 - decay * decay)
    cdef NormalStream ns
    cdef uint64_t root2
    cdef int i, m
    cdef double x, x_new, g, acc, lam, t, th, ts
    cdef double nanv = float("nan")

    for i in range(n_samples):
        ns.root = stream_root(seed_u, first + <uint64_t>i, 0UL)
        ns.parity = 0
        root2 = stream_root(seed_u, first + <uint64_t>i, 2UL)
        if has_override:
            g = gov[i]
        else:
            g = -log(unit_open(raw_word(root2, 2UL)))
        gam[i] = g
        x = 0.0
        acc = 0.0
        th = float("inf")
        ts = float("inf")
        for m in range(n_steps):
            t = m * dt
            if not isfinite(ts):
                lam = rate_at(x, delta, rate_kind, nanv)
                if lam > 0.0:
                    if acc + lam * dt >= g:
                        ts = t + (g - acc) / lam
                    acc += lam * dt
            x_new = decay * x + sd * next_normal(&ns, m)
            if not isfinite(th) and x_new >= 1.0:
                th = t + dt * (1.0 - x) / (x_new - x)
            x = x_new
        if g <= 0.0:
            ts = th
        t_hard[i] = th
        t_soft[i] = ts
    return t_hard, t_soft, gam


def fp_run(cnp.ndarray[double, ndim=1] q0, int n_steps, double tau, double h,
           double a, double b,
           cnp.ndarray[double, ndim=1] lam, cnp.ndarray[double, ndim=1] beta,
           cnp.ndarray[double, ndim=1] w_half,
           cnp.ndarray[double, ndim=1] x_nodes, cnp.ndarray[double, ndim=1] x_half,
           cnp.ndarray[double, ndim=1] mass_w, cnp.ndarray[double, ndim=1] nvec,
           int reset_index, int last_active, bint source_on,
           cnp.ndarray[int64_t, ndim=1] snap_steps,
           cnp.ndarray[double, ndim=2] probe_weights):
    """Semi-implicit stepping loop; mirrors _numpy_backend.fp_run.

    The tridiagonal factorization is reused across steps when b == 0
    (coefficients are then constant); no pivoting is needed because the
    rows are strictly diagonally dominant for tau < 1.
    """
    cdef int n = q0.shape[0]
    cdef cnp.ndarray[double, ndim=1] q = q0.copy()
    cdef cnp.ndarray[double, ndim=1] n_series = np.empty(n_steps + 1)
    cdef cnp.ndarray[double, ndim=1] mass_series = np.empty(n_steps + 1)
    cdef cnp.ndarray[double, ndim=2] snaps = np.empty((snap_steps.shape[0], n))
    cdef cnp.ndarray[double, ndim=2] probes = np.empty((probe_weights.shape[0], n_steps + 1))
    cdef cnp.ndarray[double, ndim=1] lower = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] diag = np.ones(n)
    cdef cnp.ndarray[double, ndim=1] upper = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] rhs = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] dprime = np.ones(n)
    cdef cnp.ndarray[double, ndim=1] wmul = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] log_m = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] log_mh = np.empty(n - 1)

    cdef int n_probes = probe_weights.shape[0]
    cdef int n_snaps = snap_steps.shape[0]
    cdef int lo = 1
    cdef int hi = last_active + 1
    cdef double source_coeff = tau / mass_w[reset_index]  # tau / (h g'(y_D))

    cdef int m, j, p, s = 0
    cdef double n_raw, n_used, shiftv, w, acc, mass
    cdef double min_density, min_n_raw = float("inf")
    cdef double max_mass_rise = -float("inf")
    cdef int n_clamped = 0
    cdef bint refactor = True

    mass = 0.0
    min_density = q[0]
    for j in range(n):
        mass += mass_w[j] * q[j]
        if q[j] < min_density:
            min_density = q[j]
    mass_series[0] = mass
    for p in range(n_probes):
        acc = 0.0
        for j in range(n):
            acc += probe_weights[p, j] * q[j]
        probes[p, 0] = acc
    while s < n_snaps and snap_steps[s] == 0:
        for j in range(n):
            snaps[s, j] = q[j]
        s += 1

    for m in range(n_steps):
        n_raw = 0.0
        for j in range(n):
            n_raw += nvec[j] * q[j]
        if n_raw < min_n_raw:
            min_n_raw = n_raw
        if n_raw < 0.0:
            n_clamped += 1
            n_used = 0.0
        else:
            n_used = n_raw
        n_series[m] = n_used

        if b != 0.0 or refactor:
            shiftv = b * n_used
            for j in range(n):
                w = x_nodes[j] - shiftv
                log_m[j] = -(w * w) / (2.0 * a)
            for j in range(n - 1):
                w = x_half[j] - shiftv
                log_mh[j] = -(w * w) / (2.0 * a)
            for j in range(lo, hi):
                lower[j] = -beta[j] * w_half[j - 1] * exp(log_mh[j - 1] - log_m[j - 1])
                upper[j] = -beta[j] * w_half[j] * exp(log_mh[j] - log_m[j + 1])
                diag[j] = (1.0 + tau * lam[j]
                           + beta[j] * (w_half[j] * exp(log_mh[j] - log_m[j])
                                        + w_half[j - 1] * exp(log_mh[j - 1] - log_m[j])))
            dprime[0] = diag[0]
            wmul[0] = 0.0
            for j in range(1, n):
                wmul[j] = lower[j] / dprime[j - 1]
                dprime[j] = diag[j] - wmul[j] * upper[j - 1]
                if dprime[j] == 0.0:
                    raise FloatingPointError(f"zero pivot at row {j}, step {m}")
            refactor = False

        for j in range(n):
            rhs[j] = 0.0
        for j in range(lo, hi):
            rhs[j] = q[j]
        if source_on:
            rhs[reset_index] += source_coeff * n_used
        for j in range(1, n):
            rhs[j] -= wmul[j] * rhs[j - 1]
        q[n - 1] = rhs[n - 1] / dprime[n - 1]
        for j in range(n - 2, -1, -1):
            q[j] = (rhs[j] - upper[j] * q[j + 1]) / dprime[j]

        mass = 0.0
        for j in range(n):
            if not isfinite(q[j]):
                raise FloatingPointError(f"non-finite density at step {m}")
            mass += mass_w[j] * q[j]
            if q[j] < min_density:
                min_density = q[j]
        mass_series[m + 1] = mass
        if mass - mass_series[m] > max_mass_rise:
            max_mass_rise = mass - mass_series[m]
        for p in range(n_probes):
            acc = 0.0
            for j in range(n):
                acc += probe_weights[p, j] * q[j]
            probes[p, m + 1] = acc
        while s < n_snaps and snap_steps[s] == m + 1:
            for j in range(n):
                snaps[s, j] = q[j]
            s += 1

    n_raw = 0.0
    for j in range(n):
        n_raw += nvec[j] * q[j]
    if n_raw < min_n_raw:
        min_n_raw = n_raw
    if n_raw < 0.0:
        n_clamped += 1
        n_series[n_steps] = 0.0
    else:
        n_series[n_steps] = n_raw
    return (q, n_series, mass_series, snaps, probes,
            min_density, n_clamped, min_n_raw, max_mass_rise)
