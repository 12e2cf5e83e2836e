"""Fixed-step classical Runge-Kutta integration."""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import IntegrationError


def rk4_step(rhs: Callable, state, t: float, dt: float):
    """One classical fourth-order step of ``x' = rhs(t, x)``.

    Raises ``IntegrationError`` if any stage derivative is non-finite.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = np.asarray(state, dtype=float)
    k1 = np.asarray(rhs(t, x), dtype=float)
    k2 = np.asarray(rhs(t + 0.5 * dt, x + 0.5 * dt * k1), dtype=float)
    k3 = np.asarray(rhs(t + 0.5 * dt, x + 0.5 * dt * k2), dtype=float)
    k4 = np.asarray(rhs(t + dt, x + dt * k3), dtype=float)
    for k in (k1, k2, k3, k4):
        if not np.all(np.isfinite(k)):
            raise IntegrationError(f"non-finite derivative near t={t}")
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(rhs: Callable, x0, t0: float, t1: float, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Integrate on a uniform grid; returns ``(t, X)`` including both ends."""
    n = int(round((t1 - t0) / dt))
    ts = t0 + dt * np.arange(n + 1)
    X = np.empty((n + 1, np.size(x0)))
    X[0] = x0
    for i in range(n):
        X[i + 1] = rk4_step(rhs, X[i], ts[i], dt)
    return ts, X
