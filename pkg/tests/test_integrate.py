import math

import numpy as np
import pytest

from gpcert.errors import IntegrationError
from gpcert.sim.integrate import integrate, rk4_step


def test_exponential_decay_step():
    assert rk4_step(lambda t, x: -x, [1.0], 0.0, 0.1)[0] == pytest.approx(math.exp(-0.1), abs=1e-6)


def test_constant_state():
    np.testing.assert_array_equal(rk4_step(lambda t, x: np.zeros(2), [1.0, -2.0], 0.0, 0.5), [1.0, -2.0])


def test_fourth_order_convergence():
    def err(dt):
        _, X = integrate(lambda t, x: [x[1], -x[0]], [1.0, 0.0], 0.0, 2.0, dt)
        return abs(X[-1, 0] - math.cos(2.0))

    assert err(0.1) / err(0.05) == pytest.approx(16.0, rel=0.1)


def test_non_finite_derivative():
    with pytest.raises(IntegrationError):
        rk4_step(lambda t, x: [np.inf], [1.0], 0.0, 0.1)
    with pytest.raises(ValueError):
        rk4_step(lambda t, x: x, [1.0], 0.0, 0.0)


def test_grid_shape():
    ts, X = integrate(lambda t, x: [1.0], [0.0], 0.0, 1.0, 0.25)
    np.testing.assert_allclose(ts, [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(X[:, 0], ts)
