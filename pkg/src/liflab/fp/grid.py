"""Logistically scaled spatial grid for the Fokker-Planck solvers.

The substitution y = 1/(1 + e^{-(x-1)}) concentrates resolution near the
firing threshold x = 1.  The grid is uniform in y and anchored so that both
the reset point y_r = h_L(0) and the threshold y = h_L(1) = 1/2 fall exactly
on nodes: the reset node receives the Dirac source, and the hard-wall solves
impose their absorbing boundary at the threshold node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def logistic_map(x):
    """y = h_L(x) = 1 / (1 + e^{-(x-1)})."""
    return 1.0 / (1.0 + np.exp(-(np.asarray(x, dtype=float) - 1.0)))


def logistic_inverse(y):
    """x = g_L(y) = 1 + log(y / (1-y))."""
    y = np.asarray(y, dtype=float)
    return 1.0 + np.log(y / (1.0 - y))


def metric(y):
    """g_L'(y) = 1 / (y - y^2), the Jacobian dx/dy of the inverse map."""
    y = np.asarray(y, dtype=float)
    return 1.0 / (y - y * y)


RESET_Y = 1.0 / (1.0 + math.e)  # h_L(0)
WALL_Y = 0.5                    # h_L(1)


@dataclass(frozen=True)
class LogisticGrid:
    """Uniform grid in the logistic coordinate with aligned special nodes."""

    x_min: float
    x_max: float
    n_cells: int
    h: float
    y_nodes: np.ndarray = field(repr=False)
    reset_index: int
    wall_index: int

    @property
    def x_nodes(self) -> np.ndarray:
        return logistic_inverse(self.y_nodes)

    @property
    def y_half(self) -> np.ndarray:
        """Half nodes y_{j+1/2}, length n_cells."""
        return self.y_nodes[:-1] + 0.5 * self.h

    @property
    def metric_nodes(self) -> np.ndarray:
        return metric(self.y_nodes)

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1


def build_logistic_grid(x_min: float = -4.0, x_max: float = 4.0,
                        n_cells: int = 1024) -> LogisticGrid:
    """Build the grid with ~n_cells cells covering [x_min, x_max].

    The actual cell count is adjusted (by at most a couple of percent) so
    that the reset point and the threshold are exact nodes; the outermost
    nodes are the closest on-grid points inside the requested domain.
    """
    if not (x_min < 0.0 < 1.0 < x_max):
        raise ValueError("domain must satisfy x_min < 0 < 1 < x_max")
    if n_cells < 16:
        raise ValueError(f"n_cells must be >= 16, got {n_cells}")
    y_lo = float(logistic_map(x_min))
    y_hi = float(logistic_map(x_max))
    h_target = (y_hi - y_lo) / n_cells
    k_wall = int(round((WALL_Y - RESET_Y) / h_target))
    if k_wall < 2:
        raise ValueError("n_cells too small to separate reset and threshold")
    h = (WALL_Y - RESET_Y) / k_wall
    n_left = int(math.floor((RESET_Y - y_lo) / h + 1e-12))
    n_right = int(math.floor((y_hi - WALL_Y) / h + 1e-12))
    if n_left < 2 or n_right < 2:
        raise ValueError("domain leaves no room left of the reset point "
                         "or right of the threshold")
    j = np.arange(-n_left, k_wall + n_right + 1, dtype=float)
    y_nodes = RESET_Y + j * h
    y_nodes[n_left] = RESET_Y            # exact, not n_left*h round-trip
    y_nodes[n_left + k_wall] = WALL_Y
    y_nodes.setflags(write=False)
    return LogisticGrid(
        x_min=x_min,
        x_max=x_max,
        n_cells=len(y_nodes) - 1,
        h=h,
        y_nodes=y_nodes,
        reset_index=n_left,
        wall_index=n_left + k_wall,
    )
