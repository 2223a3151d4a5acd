"""Core model definitions shared by the simulator and the PDE solver.

The membrane potential relaxes toward 0 (leak), diffuses with coefficient
``a``, fires at threshold 1 and resets to 0.  The random-discharge variant
replaces the hard threshold by a state-dependent firing rate of size
``1/delta`` above the threshold.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class RateKind(enum.Enum):
    """Shape of the discharge rate above the firing threshold."""

    LINEAR_RAMP = "ramp"
    STEP = "step"


class Mode(enum.Enum):
    """Which process a solver run or an ensemble describes."""

    HARD_WALL_FULL = "hard_wall_full"
    HARD_WALL_KILLED = "hard_wall_killed"
    DISCHARGE_FULL = "discharge_full"
    DISCHARGE_KILLED = "discharge_killed"

    @property
    def killed(self) -> bool:
        return self in (Mode.HARD_WALL_KILLED, Mode.DISCHARGE_KILLED)

    @property
    def hard_wall(self) -> bool:
        return self in (Mode.HARD_WALL_FULL, Mode.HARD_WALL_KILLED)


@dataclass(frozen=True)
class DischargeSpec:
    """Parameters of the random-discharge process.

    delta     : regularization scale, > 0; the rate above threshold is 1/delta.
    rate_kind : linear ramp (continuous) or step rate.
    b         : network connectivity; feeds b*N(t) into the drift.
    a         : diffusion coefficient, > 0.
    x0        : starting potential; must be < 1 for hard-wall runs.
    """

    delta: float
    rate_kind: RateKind = RateKind.STEP
    b: float = 0.0
    a: float = 1.0
    x0: float = -1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if not self.a > 0:
            raise ValueError(f"a must be > 0, got {self.a}")
        if not isinstance(self.rate_kind, RateKind):
            raise TypeError("rate_kind must be a RateKind")


def discharge_rate(x: float, spec: DischargeSpec) -> float:
    """Firing rate lambda^delta at potential ``x``.

    Step: 0 below the threshold, 1/delta at and above it.  Ramp: rises
    linearly from 0 at x=1 to 1/delta at x=1+delta, constant beyond.
    """
    d = spec.delta
    if spec.rate_kind is RateKind.STEP:
        return 0.0 if x < 1.0 else 1.0 / d
    if x <= 1.0:
        return 0.0
    if x >= 1.0 + d:
        return 1.0 / d
    return (x - 1.0) / (d * d)


def ou_step(x: float, dt: float, xi: float) -> float:
    """Exact one-step transition of the unit OU process dX = -X dt + sqrt(2) dB.

    Returns e^{-dt} x + sqrt(1 - e^{-2 dt}) xi for a standard-normal draw xi.
    Callers handle b != 0 by adding b*N*(1 - e^{-dt}) with N frozen over the
    step, and a != 1 by scaling the noise amplitude by sqrt(a).
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    decay = math.exp(-dt)
    return decay * x + math.sqrt(1.0 - decay * decay) * xi


def maxwellian(x: float, n_prev: float, spec: DischargeSpec) -> float:
    """Gaussian weight exp(-(x - b*N)^2 / (2a)) of the flux reformulation."""
    d = x - spec.b * n_prev
    return math.exp(-d * d / (2.0 * spec.a))
