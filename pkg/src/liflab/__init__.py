"""Monte Carlo and Fokker-Planck laboratory for integrate-and-fire models."""

from .model import DischargeSpec, Mode, RateKind, discharge_rate, maxwellian, ou_step

__version__ = "0.1.0"
