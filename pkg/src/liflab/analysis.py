"""Discrepancy metrics, power-law fits, self-similar profile extraction.

The vanishing ansatz for the density above threshold is
f(x) ~ delta^alpha * psi(delta^beta (x - 1)) on x >= 1: alpha is fitted
from the sup, beta from the width integral/sup, both by least squares in
log-log coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ConvergenceReport:
    """Fitted power law D(delta) ~ A * delta^R over a window of deltas."""

    deltas: np.ndarray
    discrepancies: np.ndarray
    fit_window: np.ndarray        # indices used for the fit
    rate: float
    prefactor: float
    residual: float
    quantity: str = ""
    b: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.deltas)
        if np.any(np.diff(d) >= 0):
            raise ValueError("deltas must be strictly decreasing")
        if np.any(np.asarray(self.discrepancies) < 0):
            raise ValueError("discrepancies must be >= 0")
        if len(self.fit_window) < 2:
            raise ValueError("fit needs at least two points")


@dataclass(frozen=True)
class SelfSimilarFit:
    alpha: float
    beta: float
    profiles: list = field(default_factory=list)   # (delta, z, psi) triples
    collapse_error: float = 0.0
    residual_alpha: float = 0.0
    residual_beta: float = 0.0


@dataclass(frozen=True)
class IterationCheck:
    """Comparison of an iterated sub-CDF against its MC estimate."""

    n: int
    convolved: float
    empirical: float
    l1_error: float


def _common_grid(fa, fb):
    fa = np.asarray(fa, dtype=float)
    fb = np.asarray(fb, dtype=float)
    if fa.shape != fb.shape:
        raise ValueError(f"grid mismatch: {fa.shape} vs {fb.shape}")
    return fa, fb


def sup_discrepancy_density(fa, fb) -> float:
    """max_j |fa_j - fb_j| over a common spatial grid."""
    fa, fb = _common_grid(fa, fb)
    return float(np.max(np.abs(fa - fb)))


def sup_discrepancy_rate(na, nb) -> float:
    """max_m |na_m - nb_m| over a common time grid."""
    na, nb = _common_grid(na, nb)
    return float(np.max(np.abs(na - nb)))


def kolmogorov_distance(cdf_a, cdf_b) -> float:
    """Sup distance between two CDFs sampled on a common grid."""
    cdf_a, cdf_b = _common_grid(cdf_a, cdf_b)
    return float(np.max(np.abs(cdf_a - cdf_b)))


def fit_power_law(deltas, values, window=None):
    """Least squares of log(values) on log(deltas).

    Returns (rate, prefactor, residual) with residual the RMS of the
    log-space misfit.  window selects indices (defaults to all).
    """
    deltas = np.asarray(deltas, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        window = np.arange(len(deltas))
    window = np.asarray(window, dtype=int)
    if len(window) < 2:
        raise ValueError("fit needs at least two points")
    d = deltas[window]
    v = values[window]
    if np.any(v <= 0):
        raise ValueError("values must be positive on the fit window")
    x = np.log(d)
    y = np.log(v)
    coeff = np.polyfit(x, y, 1)
    resid = y - np.polyval(coeff, x)
    return float(coeff[0]), float(np.exp(coeff[1])), float(np.sqrt(np.mean(resid**2)))


def extract_profile(delta: float, x, f, alpha: float, beta: float):
    """Rescale one restriction to (z, psi): z = delta^beta (x-1),
    psi = delta^{-alpha} f."""
    x = np.asarray(x, dtype=float)
    f = np.asarray(f, dtype=float)
    if len(x) != len(f) or len(x) < 2:
        raise ValueError("need matching x and f samples on x >= 1")
    if np.any(x < 1.0 - 1e-12):
        raise ValueError("profile restriction must satisfy x >= 1")
    z = delta**beta * (x - 1.0)
    psi = delta ** (-alpha) * f
    return z, psi


def profile_collapse_error(profiles, floor: float = 0.02, n_grid: int = 65) -> float:
    """Largest relative spread of the rescaled profiles on their overlap.

    Profiles are (z, psi) pairs; they are compared on a uniform grid over
    [0, min_max_z] restricted to columns where every profile exceeds
    `floor` times the peak value (the far tail measures the ansatz
    remainder, not profile agreement).
    """
    if len(profiles) == 0:
        raise ValueError("need at least one profile")
    if len(profiles) == 1:
        return 0.0
    z_max = min(float(np.max(z)) for z, _ in profiles)
    if z_max <= 0:
        raise ValueError("empty overlap window")
    zg = np.linspace(0.0, z_max, n_grid)
    vals = np.array([np.interp(zg, np.asarray(z), np.asarray(p))
                     for z, p in profiles])
    peak = float(vals[:, 0].max())
    if peak <= 0:
        raise ValueError("degenerate profiles with zero peak")
    mask = vals.min(axis=0) >= floor * peak
    if not np.any(mask):
        raise ValueError("empty overlap window after amplitude floor")
    top = vals.max(axis=0)[mask]
    bot = vals.min(axis=0)[mask]
    return float(np.max((top - bot) / top))


def fit_self_similar(family, fit_indices=None, floor: float = 0.02) -> SelfSimilarFit:
    """Fit (alpha, beta) of the vanishing ansatz from density restrictions.

    family: sequence of (delta, x, f) with x >= 1 and f the density there.
    alpha is the log-log slope of sup f; the width integral(f)/sup(f)
    scales like delta^{-beta}, giving beta.  Profiles and their collapse
    error are evaluated on the same members.
    """
    family = list(family)
    if fit_indices is not None:
        family = [family[i] for i in fit_indices]
    if len(family) < 3:
        raise ValueError("need at least three deltas to fit the ansatz")
    deltas, sups, widths = [], [], []
    for delta, x, f in family:
        x = np.asarray(x, dtype=float)
        f = np.asarray(f, dtype=float)
        sup = float(f.max())
        if sup <= 0:
            raise ValueError(f"degenerate restriction at delta={delta}")
        integral = float(np.trapezoid(f, x))
        deltas.append(float(delta))
        sups.append(sup)
        widths.append(integral / sup)
    alpha, _, res_a = fit_power_law(deltas, sups)
    slope_w, _, res_b = fit_power_law(deltas, widths)
    beta = -slope_w
    profiles = [extract_profile(d, x, f, alpha, beta) for d, x, f in family]
    collapse = profile_collapse_error(profiles, floor=floor)
    return SelfSimilarFit(alpha=alpha, beta=beta,
                          profiles=[(d, z, p) for (d, _, _), (z, p)
                                    in zip(family, profiles)],
                          collapse_error=collapse,
                          residual_alpha=res_a, residual_beta=res_b)


def convolve_subdensity(f_prev, f_t1, t_grid):
    """Time convolution F_n(x, t) = int_0^t F_{n-1}(x, t-s) f_T1(s) ds.

    f_prev has shape (n_x, n_t) on the uniform t_grid, f_t1 shape (n_t,).
    Trapezoid rule in s; returns an (n_x, n_t) array.
    """
    f_prev = np.atleast_2d(np.asarray(f_prev, dtype=float))
    f_t1 = np.asarray(f_t1, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    nt = len(t_grid)
    if f_prev.shape[1] != nt or len(f_t1) != nt:
        raise ValueError("grid mismatch between f_prev, f_t1 and t_grid")
    if nt >= 2:
        dt = t_grid[1] - t_grid[0]
        if np.max(np.abs(np.diff(t_grid) - dt)) > 1e-9 * max(dt, 1.0):
            raise ValueError("t_grid must be uniform")
    if np.any(f_t1 < 0):
        raise ValueError("f_t1 must be nonnegative")
    out = np.zeros_like(f_prev)
    for m in range(1, nt):
        s = np.arange(m + 1)
        w = np.full(m + 1, dt)
        w[0] = w[-1] = 0.5 * dt
        out[:, m] = (f_prev[:, m - s] * (f_t1[s] * w)).sum(axis=1)
    return out


def weighted_rate_integral(times, values, phi) -> float:
    """Trapezoid integral of phi(t) * N(t) over the sampled series."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if not (len(times) == len(values) == len(phi)):
        raise ValueError("grid mismatch between times, values and phi")
    return float(np.trapezoid(phi * values, times))
