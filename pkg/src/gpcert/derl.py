"""Disturbance error rate limiting of the GP prediction.

Each sample either passes the new prediction through, when its Gaussian
uncertainty certifies the error-rate bound at the requested confidence, or
moves the filtered output toward it by at most ``z_lim * T_s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

from numba import njit
from scipy.stats import norm


class Branch(IntEnum):
    PROBABILISTIC = 1
    DETERMINISTIC = 2


def sigma_fac_for(p_lim: float) -> float:
    """Two-sided Gaussian quantile: ``P(|N(0,1)| <= sigma_fac) = p_lim``."""
    if not 0.0 < p_lim < 1.0:
        raise ValueError("p_lim must lie in (0, 1)")
    return float(norm.ppf(0.5 * (1.0 + p_lim)))


def p_lim_for(sigma_fac: float) -> float:
    if not sigma_fac > 0:
        raise ValueError("sigma_fac must be positive")
    return float(2.0 * norm.cdf(sigma_fac) - 1.0)


@njit(cache=True)
def _derl_core(z_hat, z_tilde, var_tilde, var_prev, z_lim, sigma_fac, T_s):
    step = z_lim * T_s
    inc = z_tilde - z_hat
    std = math.sqrt(var_tilde + var_prev)
    if abs(inc) + sigma_fac * std <= step:
        return z_tilde, 1
    if inc > step:
        inc = step
    elif inc < -step:
        inc = -step
    return z_hat + inc, 2


@dataclass(frozen=True)
class DerlState:
    z_hat: float
    z_lim: float
    T_s: float
    sigma_fac: float = 5.0
    p_lim: float | None = None

    def __post_init__(self):
        if self.z_lim < 0:
            raise ValueError("z_lim must be non-negative")
        if not self.T_s > 0:
            raise ValueError("T_s must be positive")
        if self.p_lim is None:
            object.__setattr__(self, "p_lim", p_lim_for(self.sigma_fac))
        elif not 0.0 < self.p_lim < 1.0:
            raise ValueError("p_lim must lie in (0, 1)")

    @classmethod
    def from_p_lim(cls, z_hat: float, z_lim: float, T_s: float, p_lim: float) -> "DerlState":
        return cls(z_hat, z_lim, T_s, sigma_fac_for(p_lim), p_lim)


def derl_step(state: DerlState, z_tilde: float, var_tilde: float, var_prev: float) -> tuple[float, Branch]:
    """Filter one new prediction ``z_tilde``.

    The increment ``z_tilde - z_hat`` is accepted as-is when
    ``|increment| + sigma_fac * sqrt(var_tilde + var_prev) <= z_lim * T_s``;
    otherwise it is clipped to ``+-z_lim * T_s``.  Cross-covariance between
    successive predictions is ignored.  Returns ``(z_hat_next, branch)``;
    the caller carries ``z_hat_next`` into the next state.
    """
    if var_tilde < 0 or var_prev < 0:
        raise ValueError("variances must be non-negative")
    z_next, code = _derl_core(
        state.z_hat, float(z_tilde), float(var_tilde), float(var_prev), state.z_lim, state.sigma_fac, state.T_s
    )
    return float(z_next), Branch(code)


def compute_zlim(e_y_lim: float, gamma: float, zdot_inf: float) -> float:
    """Rate limit ``max(e_y_lim / gamma - zdot_inf, 0)`` for a target error bound."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if zdot_inf < 0:
        raise ValueError("zdot_inf must be non-negative")
    return max(e_y_lim / gamma - zdot_inf, 0.0)


def rate_bound_probability(
    z_tilde: float, z_hat: float, var_tilde: float, var_prev: float, z_lim: float, T_s: float
) -> float:
    """Probability that an accepted prediction keeps ``|z_e'| <= z_lim``.

    The error increment over one sample is modelled as the accepted
    increment ``z_tilde - z_hat`` plus a zero-mean Gaussian with variance
    ``var_tilde + var_prev``.  Whenever the probabilistic branch accepts,
    the result is at least ``p_lim``.
    """
    std = math.sqrt(var_tilde + var_prev)
    step = z_lim * T_s
    inc = z_tilde - z_hat
    if std == 0.0:
        return 1.0 if abs(inc) <= step else 0.0
    return float(norm.cdf((step - inc) / std) - norm.cdf((-step - inc) / std))
