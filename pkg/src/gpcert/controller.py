"""Adaptive control law, parameter update and the bound-design workflow."""

from __future__ import annotations

from dataclasses import dataclass, replace

from numba import njit

from .derl import compute_zlim
from .errors import SingularGainError
from .lmi import LyapunovCertificate, bisect_delta
from .model_core import GainBand, PlantModel, build_error_polytope, gain_band_from_grid

B_MIN = 1e-9


@njit(cache=True)
def _control_core(e_y, ydot_r, z_est, a_v, b_v, e_v, K_P):
    return (ydot_r + K_P * e_y - a_v - e_v * z_est) / b_v


@dataclass(frozen=True)
class ControllerState:
    z_bar: float
    K_P: float
    K_I: float

    def __post_init__(self):
        if not (self.K_P > 0 and self.K_I > 0):
            raise ValueError("controller gains must be positive")


def control_input(
    y: float,
    y_r: float,
    ydot_r: float,
    z_bar: float,
    z_hat: float,
    plant: PlantModel,
    K_P: float,
    t: float = 0.0,
) -> float:
    """``u = (y_r' + K_P e_y - a - e (z_bar + z_hat)) / b`` with ``e_y = y_r - y``.

    With ``z_hat = 0`` this is the purely adaptive law.
    """
    b_v = plant.b(y, t)
    if abs(b_v) < B_MIN:
        raise SingularGainError(f"|b(y={y}, t={t})| = {abs(b_v):.3g} below {B_MIN}")
    return float(_control_core(y_r - y, ydot_r, z_bar + z_hat, plant.a(y, t), b_v, plant.e(y, t), K_P))


def update_zbar(state: ControllerState, e_y: float, e_gain: float, T_s: float) -> ControllerState:
    """Euler step of ``z_bar' = -K_I e(y, t) e_y``."""
    if not T_s > 0:
        raise ValueError("T_s must be positive")
    return replace(state, z_bar=state.z_bar - T_s * state.K_I * e_gain * e_y)


@dataclass(frozen=True)
class BoundConfig:
    """Outcome of the design workflow: gain band, certificate and DERL limit."""

    y_r_range: tuple[float, float]
    e_y_lim: float
    gain_band: GainBand
    gamma: float
    z_lim: float
    zdot_inf: float
    certificate: LyapunovCertificate

    def __post_init__(self):
        if not self.e_y_lim > 0:
            raise ValueError("e_y_lim must be positive")
        expected = compute_zlim(self.e_y_lim, self.gamma, self.zdot_inf)
        if abs(expected - self.z_lim) > 1e-12 * max(1.0, expected):
            raise ValueError(f"z_lim={self.z_lim} inconsistent with e_y_lim/gamma - zdot_inf = {expected}")


def derive_bound_config(
    plant: PlantModel,
    y_r_range: tuple[float, float],
    e_y_lim: float,
    K_P: float,
    K_I: float,
    zdot_inf: float = 0.0,
    t: float = 0.0,
    tol: float = 1e-3,
    n_grid: int = 1000,
) -> BoundConfig:
    """Band of ``e`` over ``Y_r`` widened by ``e_y_lim``, certified gain and ``z_lim``.

    Raises ``InfeasibleError`` when the resulting polytope has no certificate.
    """
    lo, hi = y_r_range
    band = gain_band_from_grid(plant.e, (lo - e_y_lim, hi + e_y_lim), t=t, n_grid=n_grid)
    cert = bisect_delta(build_error_polytope(K_P, K_I, band), tol=tol)
    return BoundConfig(
        y_r_range=(float(lo), float(hi)),
        e_y_lim=float(e_y_lim),
        gain_band=band,
        gamma=cert.gamma,
        z_lim=compute_zlim(e_y_lim, cert.gamma, zdot_inf),
        zdot_inf=float(zdot_inf),
        certificate=cert,
    )
