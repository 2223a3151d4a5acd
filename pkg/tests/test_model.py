import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from liflab.model import DischargeSpec, RateKind, discharge_rate, maxwellian, ou_step


def test_ou_step_fixed_point():
    assert ou_step(0.0, 0.1, 0.0) == 0.0


def test_ou_step_half_life():
    assert ou_step(1.0, math.log(2.0), 0.0) == pytest.approx(0.5, rel=1e-15)


def test_ou_step_rejects_bad_dt():
    with pytest.raises(ValueError):
        ou_step(0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        ou_step(0.0, -1.0, 0.0)


def test_ou_step_stationary_variance():
    # moment-estimation oracle: iterate to t = 10 from 0 over 2e5 samples;
    # the stationary variance of the unit OU process with sqrt(2) noise is 1
    rng = np.random.default_rng(0)
    n = 200_000
    x = np.zeros(n)
    dt = 0.05
    decay = math.exp(-dt)
    sd = math.sqrt(1.0 - decay * decay)
    for _ in range(200):
        x = decay * x + sd * rng.standard_normal(n)
    assert x.var() == pytest.approx(1.0, abs=0.02)


@pytest.mark.parametrize("x,expected", [(0.5, 0.0), (1.25, 4.0), (1.125, 2.0)])
def test_ramp_rate_values(x, expected):
    spec = DischargeSpec(delta=0.25, rate_kind=RateKind.LINEAR_RAMP)
    assert discharge_rate(x, spec) == pytest.approx(expected)


def test_ramp_rate_continuous_at_kinks():
    spec = DischargeSpec(delta=0.25, rate_kind=RateKind.LINEAR_RAMP)
    for x in (1.0, 1.25):
        below = discharge_rate(x - 1e-12, spec)
        above = discharge_rate(x + 1e-12, spec)
        assert abs(above - below) < 1e-9


def test_step_rate_values():
    spec = DischargeSpec(delta=0.125, rate_kind=RateKind.STEP)
    assert discharge_rate(0.999, spec) == 0.0
    assert discharge_rate(1.0, spec) == 8.0
    assert discharge_rate(3.0, spec) == 8.0


@given(x=st.floats(-10, 10), y=st.floats(-10, 10),
       delta=st.sampled_from([0.5, 0.125, 0.03125]),
       kind=st.sampled_from(list(RateKind)))
def test_rate_monotone_and_bounded(x, y, delta, kind):
    spec = DischargeSpec(delta=delta, rate_kind=kind)
    lo, hi = sorted((x, y))
    rlo, rhi = discharge_rate(lo, spec), discharge_rate(hi, spec)
    assert rlo <= rhi
    assert 0.0 <= rhi <= 1.0 / delta


def test_maxwellian_values():
    spec = DischargeSpec(delta=0.5, b=0.0, a=1.0)
    assert maxwellian(0.0, 0.3, spec) == 1.0
    assert maxwellian(1.0, 0.0, spec) == pytest.approx(math.exp(-0.5))
    spec_b = DischargeSpec(delta=0.5, b=2.0, a=1.0)
    assert maxwellian(2.0 * 0.7, 0.7, spec_b) == 1.0


def test_spec_validation():
    with pytest.raises(ValueError):
        DischargeSpec(delta=0.0)
    with pytest.raises(ValueError):
        DischargeSpec(delta=0.5, a=-1.0)
    with pytest.raises(TypeError):
        DischargeSpec(delta=0.5, rate_kind="step")
