import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpcert.derl import (
    Branch,
    DerlState,
    compute_zlim,
    derl_step,
    p_lim_for,
    rate_bound_probability,
    sigma_fac_for,
)


def test_unchanged_prediction_passes_through():
    s = DerlState(1.5, 1.0, 1e-3)
    z, br = derl_step(s, 1.5, 0.3, 0.3)
    assert z == 1.5


def test_step_is_ramped_at_rate_limit():
    s = DerlState(0.0, 1.0, 1e-3)
    z, br = derl_step(s, 10.0, 1.0, 1.0)
    assert br == Branch.DETERMINISTIC
    assert z == pytest.approx(1e-3)
    n = 1
    while z < 10.0 - 1e-9:
        s = DerlState(z, 1.0, 1e-3)
        z, _ = derl_step(s, 10.0, 1.0, 1.0)
        n += 1
    assert n == pytest.approx(10000, abs=2)


def test_confident_prediction_is_accepted():
    s = DerlState(0.0, 1.0, 1e-3, sigma_fac=5.0)
    z, br = derl_step(s, 5e-4, 1e-9, 1e-9)
    assert br == Branch.PROBABILISTIC and z == 5e-4


def test_zero_rate_limit_freezes_output():
    s = DerlState(0.7, 0.0, 1e-3)
    for zt in (0.0, 0.7, 3.0):
        assert derl_step(s, zt, 0.0, 0.0)[0] == 0.7


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 1), st.floats(0, 1), st.floats(0, 5), st.floats(0.5, 6))
def test_increment_never_exceeds_rate_limit(zh, zt, v1, v2, zl, sf):
    s = DerlState(zh, zl, 1e-3, sigma_fac=sf)
    z, _ = derl_step(s, zt, v1, v2)
    assert abs(z - zh) <= zl * 1e-3 * (1 + 1e-12) + 1e-15


@given(st.floats(0.5, 0.999))
def test_quantile_round_trip(p):
    assert p_lim_for(sigma_fac_for(p)) == pytest.approx(p, rel=1e-10)


def test_known_quantiles():
    assert sigma_fac_for(0.95) == pytest.approx(1.959964, rel=1e-6)
    assert p_lim_for(5.0) == pytest.approx(1 - 5.733e-7, rel=1e-9)


@given(st.floats(-2e-3, 2e-3), st.floats(0, 1e-6), st.floats(0, 1e-6), st.sampled_from([0.95, 0.99]))
def test_accepted_steps_meet_probability(inc, v1, v2, p):
    s = DerlState.from_p_lim(0.0, 1.0, 1e-3, p)
    _, br = derl_step(s, inc, v1, v2)
    if br == Branch.PROBABILISTIC:
        assert rate_bound_probability(inc, 0.0, v1, v2, 1.0, 1e-3) >= p - 1e-12


def test_compute_zlim_examples():
    assert compute_zlim(0.05, 0.024, 0.0) == pytest.approx(2.08333, rel=1e-5)
    assert compute_zlim(0.1061, 0.2653, 0.2) == pytest.approx(0.2, abs=1e-3)
    assert compute_zlim(0.01, 0.5, 1.0) == 0.0
    with pytest.raises(ValueError):
        compute_zlim(0.1, 0.0, 0.0)


def test_state_validation():
    with pytest.raises(ValueError):
        DerlState(0.0, -1.0, 1e-3)
    with pytest.raises(ValueError):
        derl_step(DerlState(0.0, 1.0, 1e-3), 0.0, -1.0, 0.0)
    assert DerlState(0.0, 1.0, 1e-3).p_lim == pytest.approx(p_lim_for(5.0))
    assert math.isclose(DerlState.from_p_lim(0.0, 1.0, 1e-3, 0.99).sigma_fac, sigma_fac_for(0.99))
    assert np.isfinite(rate_bound_probability(0.0, 0.0, 0.0, 0.0, 1.0, 1e-3))
