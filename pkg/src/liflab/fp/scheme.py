"""Discrete Scharfetter-Gummel operator on the logistic grid.

The flux between nodes j and j+1 is written with the Gaussian weight
M(x) = exp(-(x - b*N)^2 / (2a)) evaluated at the physical midpoint
g_L(y_{j+1/2}), so that the discrete flux of any multiple of the node-wise
weight vanishes identically (well-balance).  Assembled per time step:

  q_j^{m+1} (1 + tau*lam_j) - beta_j [ w_{j+1/2} (R+_j q_{j+1}^{m+1} - C+_j q_j^{m+1})
                                     - w_{j-1/2} (C-_j q_j^{m+1} - R-_j q_{j-1}^{m+1}) ]
      = q_j^m + source,

with beta_j = tau*a*(y_j - y_j^2)/h^2, w = y - y^2 at half nodes, and the
R/C factors the Maxwellian ratios M_half/M_node.  The firing rate N and the
weight M are frozen at the previous step (semi-implicit).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model import DischargeSpec, Mode, RateKind, discharge_rate
from .grid import LogisticGrid


def rate_on_nodes(x_nodes: np.ndarray, spec: DischargeSpec,
                  rate_override: float | None = None) -> np.ndarray:
    """lambda^delta at the physical node positions."""
    if rate_override is not None:
        if rate_override < 0:
            raise ValueError("rate_override must be >= 0")
        return np.full_like(x_nodes, float(rate_override))
    if spec.rate_kind is RateKind.STEP:
        return np.where(x_nodes >= 1.0, 1.0 / spec.delta, 0.0)
    ramp = np.clip((x_nodes - 1.0) / spec.delta**2, 0.0, 1.0 / spec.delta)
    return np.where(x_nodes <= 1.0, 0.0, ramp)


@dataclass
class SchemeOperator:
    """Everything fixed over a solve: geometry, rate, mode wiring."""

    grid: LogisticGrid
    spec: DischargeSpec
    mode: Mode
    tau: float
    lam: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)       # tau*a*(y-y^2)/h^2 per node
    w_half: np.ndarray = field(repr=False)     # y - y^2 at half nodes
    x_nodes: np.ndarray = field(repr=False)
    x_half: np.ndarray = field(repr=False)
    mass_w: np.ndarray = field(repr=False)     # h * g_L'(y_j); mass = mass_w @ q
    nvec: np.ndarray = field(repr=False)       # firing rate N = nvec @ q
    source_coeff: float                        # rhs[reset] += source_coeff * N
    last_active: int                           # highest non-pinned node index

    # Maxwellian ratio cache for b == 0 (weights never change)
    _ratios: tuple | None = None

    @property
    def source_on(self) -> bool:
        return not self.mode.killed

    def maxwellian_ratios(self, n_prev: float):
        """(R-, C-, C+, R+) per interior node for the frozen rate n_prev.

        R-_j = M_{j-1/2}/M_{j-1},  C-_j = M_{j-1/2}/M_j,
        C+_j = M_{j+1/2}/M_j,      R+_j = M_{j+1/2}/M_{j+1}.
        """
        if self.spec.b == 0.0 and self._ratios is not None:
            return self._ratios
        a2 = 2.0 * self.spec.a
        shift = self.spec.b * n_prev
        log_m = -((self.x_nodes - shift) ** 2) / a2
        log_mh = -((self.x_half - shift) ** 2) / a2
        r_minus = np.exp(log_mh[:-1] - log_m[:-2])   # at node j: half j-1 vs node j-1
        c_minus = np.exp(log_mh[:-1] - log_m[1:-1])
        c_plus = np.exp(log_mh[1:] - log_m[1:-1])
        r_plus = np.exp(log_mh[1:] - log_m[2:])
        ratios = (r_minus, c_minus, c_plus, r_plus)
        if self.spec.b == 0.0:
            self._ratios = ratios
        return ratios


def build_operator(grid: LogisticGrid, spec: DischargeSpec, mode: Mode,
                   tau: float, rate_override: float | None = None) -> SchemeOperator:
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    y = grid.y_nodes
    x = grid.x_nodes
    yh = grid.y_half
    h = grid.h
    w_nodes = y - y * y
    lam = (np.zeros_like(x) if mode.hard_wall
           else rate_on_nodes(x, spec, rate_override))
    beta = tau * spec.a * w_nodes / (h * h)
    mass_w = h / w_nodes
    if mode.hard_wall:
        # N = -a * d_x f(1-) by the one-sided second-order difference through
        # the threshold node (where f = 0) and the two interior neighbors.
        w_idx = grid.wall_index
        x0, x1, x2 = x[w_idx], x[w_idx - 1], x[w_idx - 2]
        nvec = np.zeros_like(x)
        nvec[w_idx - 1] = -spec.a * (x0 - x2) / ((x1 - x0) * (x1 - x2))
        nvec[w_idx - 2] = -spec.a * (x0 - x1) / ((x2 - x0) * (x2 - x1))
        last_active = w_idx - 1
    else:
        nvec = mass_w * lam
        last_active = grid.n_nodes - 2
    d = grid.reset_index
    return SchemeOperator(
        grid=grid, spec=spec, mode=mode, tau=tau,
        lam=lam, beta=beta, w_half=yh - yh * yh,
        x_nodes=x, x_half=np.asarray(grid_x_half(grid)),
        mass_w=mass_w, nvec=nvec,
        source_coeff=tau * (y[d] - y[d] * y[d]) / h,
        last_active=last_active,
    )


def grid_x_half(grid: LogisticGrid) -> np.ndarray:
    yh = grid.y_half
    return 1.0 + np.log(yh / (1.0 - yh))


def assemble(op: SchemeOperator, q: np.ndarray, n_prev: float):
    """Tridiagonal system (lower, diag, upper, rhs) for one implicit step.

    Boundary nodes (and every node at or beyond the threshold in hard-wall
    mode) are pinned to zero through identity rows.
    """
    if not np.all(np.isfinite(q)) or not np.isfinite(n_prev):
        raise FloatingPointError("non-finite density or firing rate")
    n = q.shape[0]
    lower = np.zeros(n)
    diag = np.ones(n)
    upper = np.zeros(n)
    rhs = np.zeros(n)
    r_minus, c_minus, c_plus, r_plus = op.maxwellian_ratios(n_prev)
    lo, hi = 1, op.last_active + 1     # active unknowns q_lo .. q_{hi-1}
    b = op.beta[lo:hi]
    wl = op.w_half[lo - 1:hi - 1]
    wr = op.w_half[lo:hi]
    sl = slice(lo - 1, hi - 1)
    lower[lo:hi] = -b * wl * r_minus[sl]
    upper[lo:hi] = -b * wr * r_plus[sl]
    diag[lo:hi] = 1.0 + op.tau * op.lam[lo:hi] + b * (wr * c_plus[sl] + wl * c_minus[sl])
    rhs[lo:hi] = q[lo:hi]
    if op.source_on:
        rhs[op.grid.reset_index] += op.source_coeff * n_prev
    return lower, diag, upper, rhs


def boundary_outflux(op: SchemeOperator, q: np.ndarray, n_prev: float) -> float:
    """Total discrete probability flux leaving through the pinned nodes.

    Evaluated on the post-step density; the per-step mass identity is
      mass(q') - mass(q) = tau * (N_source - nvec_sink @ q' - outflux).
    """
    r_minus, c_minus, c_plus, r_plus = op.maxwellian_ratios(n_prev)
    a_h = op.spec.a / op.grid.h
    lo, hi = 1, op.last_active + 1
    left = a_h * op.w_half[lo - 1] * (c_minus[lo - 1] * q[lo] - r_minus[lo - 1] * q[lo - 1])
    right = a_h * op.w_half[hi - 1] * (r_plus[hi - 2] * q[hi] - c_plus[hi - 2] * q[hi - 1])
    return float(left - right)
