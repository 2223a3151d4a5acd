"""Empirical estimators over path ensembles: CDFs, sub-CDFs, histograms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paths import PathEnsemble


@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous step CDF of a finite sample."""

    sorted_samples: np.ndarray
    n: int

    def __call__(self, x):
        return np.searchsorted(self.sorted_samples, x, side="right") / self.n


def empirical_cdf(samples) -> EmpiricalCdf:
    samples = np.asarray(samples, dtype=float)
    samples = samples[np.isfinite(samples)]
    if samples.size < 1:
        raise ValueError("need at least one finite sample")
    return EmpiricalCdf(np.sort(samples), samples.size)


def empirical_sub_cdf(ens: PathEnsemble, n: int, x: float, t: float) -> float:
    """P(X_t <= x, exactly n firings by t), estimated over the ensemble.

    t must be one of the ensemble's probe times.  Killed paths stop
    contributing from their kill time on (their probe state is NaN), which
    matches the sub-density of the surviving mass for killed ensembles.
    """
    if n < 0:
        raise ValueError("jump count n must be >= 0")
    if ens.n_paths < 1:
        raise ValueError("empty ensemble")
    states = ens.states_at(t)
    counts = ens.counts_at(t)
    hit = (counts == n) & (states <= x)
    return float(np.count_nonzero(hit) / ens.n_paths)


def empirical_full_cdf(ens: PathEnsemble, t: float) -> EmpiricalCdf:
    """Empirical CDF of the state at probe time t (finite states only)."""
    return empirical_cdf(ens.states_at(t))


def empirical_survival(ens: PathEnsemble, t: float) -> float:
    """Fraction of paths with no firing by t."""
    return float(np.mean(ens.counts_at(t) == 0))


def empirical_jump_time_density(ens: PathEnsemble, n: int, bin_width: float,
                                t_max: float | None = None):
    """Histogram density of the n-th firing time T_n.

    Returns (edges, density); the bin masses sum to the empirical
    probability P(T_n <= t_max).
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    if ens.n_paths < 1:
        raise ValueError("empty ensemble")
    if t_max is None:
        t_max = float(ens.probe_times[-1])
    tn = ens.nth_jump_times(n)
    tn = tn[tn <= t_max + 1e-12]
    n_bins = max(1, int(round(t_max / bin_width)))
    edges = np.linspace(0.0, n_bins * bin_width, n_bins + 1)
    counts, _ = np.histogram(tn, bins=edges)
    return edges, counts / (ens.n_paths * bin_width)


def empirical_firing_rate(ens: PathEnsemble, bin_width: float,
                          t_max: float | None = None):
    """Binned estimate of the mean firing rate N(t) with its standard error.

    Returns (edges, rate, stderr) with rate = jumps per path per unit time
    and a Poisson-count standard error per bin.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    if ens.n_paths < 1:
        raise ValueError("empty ensemble")
    if t_max is None:
        t_max = float(ens.probe_times[-1])
    n_bins = max(1, int(round(t_max / bin_width)))
    edges = np.linspace(0.0, n_bins * bin_width, n_bins + 1)
    counts, _ = np.histogram(ens.jump_times, bins=edges)
    scale = ens.n_paths * bin_width
    return edges, counts / scale, np.sqrt(counts) / scale


def mean_jump_count(ens: PathEnsemble, t: float) -> float:
    """Average number of firings per path by probe time t."""
    return float(np.mean(ens.counts_at(t)))
