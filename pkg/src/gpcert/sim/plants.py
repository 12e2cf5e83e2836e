"""Plants used by the simulator: a cubic benchmark and a pneumatic tank replica.

Pneumatic units
---------------
The output ``y`` is the tank gauge pressure in bar and the control input
``v`` the desired inlet mass flow in g/s.  The flow term ``Psi`` is evaluated
on the pressure drop in Pa, so the regularisation ``epsilon_reg`` carries the
unit sqrt(Pa).  The hidden valve function is expressed in units of
``1e-4 g/(s sqrt(Pa))``, which keeps its values of order one.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from ..model_core import PlantModel

PA_PER_BAR = 1e5
Z_UNIT = 1e-4


# cubic benchmark:  y' = -1 + y^3 + y^3 u + y z
@njit(cache=True)
def cubic_a(y, t):
    return -1.0 + y * y * y


@njit(cache=True)
def cubic_b(y, t):
    return y * y * y


@njit(cache=True)
def cubic_e(y, t):
    return y


@njit(cache=True)
def no_hidden(zeta):
    return 0.0


def cubic_plant() -> PlantModel:
    return PlantModel(cubic_a, cubic_b, cubic_e, name="cubic")


@njit(cache=True)
def psi(dp, eps):
    """Regularised turbulent flow law ``sgn(dp) (-eps/2 + sqrt(eps^2/4 + |dp|))``."""
    if dp == 0.0:
        return 0.0
    s = 1.0 if dp > 0.0 else -1.0
    return s * (-0.5 * eps + math.sqrt(0.25 * eps * eps + abs(dp)))


@dataclass(frozen=True)
class PneumaticPlant:
    """Isothermal tank filled through a known valve and drained through an unknown one.

    Parameters
    ----------
    R_gas : float
        Specific gas constant in J/(g K).
    T0 : float
        Temperature in K.
    V_tank : float
        Volume in m^3.
    p_in, p_U : float
        Supply and ambient pressure in bar (gauge, so ``p_U`` defaults to 0).
    epsilon_reg : float
        Regularisation of ``Psi`` in sqrt(Pa).
    k_v : float
        Inlet valve coefficient in g/(s V sqrt(Pa)).
    z_max, z_mid, z_width : float
        Hidden outlet function ``z_max / (1 + exp(-(u_z - z_mid) / z_width))``.
    """

    R_gas: float = 0.2871
    T0: float = 293.15
    V_tank: float = 4e-4
    p_in: float = 4.0
    p_U: float = 0.0
    epsilon_reg: float = 1.0
    k_v: float = 2.5e-4
    z_max: float = 3.0
    z_mid: float = 2.5
    z_width: float = 0.6

    def __post_init__(self):
        if not (self.R_gas > 0 and self.T0 > 0 and self.V_tank > 0):
            raise ValueError("R_gas, T0 and V_tank must be positive")
        if self.p_U < 0 or not self.p_in > self.p_U:
            raise ValueError("need 0 <= p_U < p_in")
        if not self.epsilon_reg > 0:
            raise ValueError("epsilon_reg must be positive")
        if not (self.k_v > 0 and self.z_width > 0):
            raise ValueError("k_v and z_width must be positive")

    @property
    def rt_over_v(self) -> float:
        """``R T / V`` in Pa/g."""
        return self.R_gas * self.T0 / self.V_tank

    @property
    def b_gain(self) -> float:
        """Pressure rate in bar/s per g/s of inlet flow."""
        return self.rt_over_v / PA_PER_BAR

    def psi(self, dp_bar: float) -> float:
        return float(psi(dp_bar * PA_PER_BAR, self.epsilon_reg))

    def e_gain(self, y: float) -> float:
        return -self.b_gain * Z_UNIT * self.psi(y - self.p_U)

    def z_f(self, u_z: float) -> float:
        return self.z_max / (1.0 + math.exp(-(u_z - self.z_mid) / self.z_width))

    def g(self, p: float, u_C: float) -> float:
        """Inlet mass flow in g/s; positive voltage fills, negative vents."""
        if u_C >= 0.0:
            return self.k_v * u_C * self.psi(self.p_in - p)
        return self.k_v * u_C * self.psi(p - self.p_U)

    def g_I(self, p: float, m_dot: float) -> float:
        """Valve voltage that realises the inlet flow ``m_dot`` at pressure ``p``."""
        if m_dot >= 0.0:
            d = self.psi(self.p_in - p)
        else:
            d = self.psi(p - self.p_U)
        if not d > 0:
            raise ValueError(f"valve cannot realise flow {m_dot} at p={p}")
        return m_dot / (self.k_v * d)

    def to_dict(self) -> dict:
        return asdict(self)

    def model(self) -> PlantModel:
        a, b, e, z_f = _pneumatic_fns(
            self.b_gain, self.p_U, self.epsilon_reg, self.z_max, self.z_mid, self.z_width
        )
        return PlantModel(a, b, e, z_f=z_f, z_bounds=((0.0, 5.0),), name="pneumatic")


@lru_cache(maxsize=None)
def _pneumatic_fns(b_gain, p_U, eps, z_max, z_mid, z_width):
    ez = -b_gain * Z_UNIT

    @njit
    def a(y, t):
        return 0.0

    @njit
    def b(y, t):
        return b_gain

    @njit
    def e(y, t):
        return ez * psi((y - p_U) * PA_PER_BAR, eps)

    @njit
    def z_f(u_z):
        return z_max / (1.0 + math.exp(-(u_z - z_mid) / z_width))

    return a, b, e, z_f


def pneumatic_rhs(p: float, u_C: float, u_z: float, plant: PneumaticPlant) -> float:
    """Pressure rate in bar/s of the mass-balance model."""
    if not p > 0:
        raise ValueError("pressure must be positive")
    m_in = plant.g(p, u_C)
    m_out = Z_UNIT * plant.psi(p - plant.p_U) * plant.z_f(u_z)
    return plant.b_gain * (m_in - m_out)


def pneumatic_band(plant: PneumaticPlant, y_range: tuple[float, float]) -> tuple[float, float]:
    """Exact ``(e_minus, e_plus)`` over ``y_range``; ``e`` is monotone in ``y``."""
    vals = np.array([plant.e_gain(y) for y in y_range])
    return float(vals.min()), float(vals.max())
