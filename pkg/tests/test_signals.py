import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from gpcert.sim.signals import (
    RampSignalSpec,
    StepSignalSpec,
    disturbance_signal,
    generate_disturbance,
    generate_reference,
    reference_signal,
)


@given(st.integers(0, 10**6))
def test_reference_stays_in_range(seed):
    s = generate_reference(seed, 0.9, 1e-3, 1.11, 9.89, 1e-2, 20.0)
    assert s.value.min() >= 1.11 - 1e-12 and s.value.max() <= 9.89 + 1e-12


def test_reference_rate_matches_finite_difference():
    T_s = 1e-4
    s = generate_reference(5, 1.0, 0.3, 0.0, 1.0, T_s, 3.0)
    fd = np.diff(s.value) / T_s
    mid = 0.5 * (s.rate[1:] + s.rate[:-1])
    # skip the intervals that contain a switch instant
    keep = np.ones_like(fd, dtype=bool)
    for k in range(1, 4):
        keep[int(round(k / T_s)) - 1] = False
    np.testing.assert_allclose(fd[keep], mid[keep], atol=1e-3)


def test_short_filter_reproduces_steps():
    sig = reference_signal(2, 1.0, 1e-4, 0.0, 1.0, 5.0)
    for k in range(5):
        assert sig.evaluate(k + 0.5)[0] == pytest.approx(sig.targets[k], abs=1e-12)


def test_reference_is_reproducible():
    a = generate_reference(11, 0.5, 0.1, 0.0, 1.0, 1e-2, 4.0)
    b = generate_reference(11, 0.5, 0.1, 0.0, 1.0, 1e-2, 4.0)
    np.testing.assert_array_equal(a.value, b.value)


@given(st.integers(0, 10**6), st.floats(0.05, 2.0))
def test_disturbance_rate_limited(seed, rate):
    s = generate_disturbance(seed, 3.0, 100.0, rate, 1e-2, 30.0)
    assert np.abs(s.rate).max() <= rate
    assert np.abs(np.diff(s.value)).max() <= rate * 1e-2 * (1 + 1e-9)


def test_zero_sigma_gives_zero():
    s = generate_disturbance(1, 3.0, 0.0, 0.2, 1e-2, 10.0)
    assert np.all(s.value == 0.0)


def test_unlimited_rate_hits_targets_at_switches():
    sig = disturbance_signal(4, 2.0, 1.0, math.inf, 10.0)
    for k in range(5):
        assert sig.evaluate(2.0 * k)[0] == sig.targets[k]


def test_spec_validation():
    with pytest.raises(ValidationError):
        StepSignalSpec(kind="uniform_steps", lo=2.0, hi=1.0)
    with pytest.raises(ValidationError):
        StepSignalSpec(kind="constant")
    with pytest.raises(ValidationError):
        RampSignalSpec(kind="gaussian_ramp", rate_limit=0.0)
    with pytest.raises(ValidationError):
        RampSignalSpec(kind="zero", bogus=1)


def test_constant_specs():
    r = StepSignalSpec(kind="constant", value=2.7).build(None, 10.0)
    assert r.evaluate(3.3) == (2.7, 0.0)
    z = RampSignalSpec(kind="constant", value=4.0).build(None, 10.0)
    assert z.evaluate(0.0) == (4.0, 0.0)
