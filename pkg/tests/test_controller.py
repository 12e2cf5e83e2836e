import numpy as np
import pytest

from gpcert.controller import BoundConfig, ControllerState, control_input, derive_bound_config, update_zbar
from gpcert.errors import SingularGainError
from gpcert.model_core import PlantModel
from gpcert.sim.integrate import integrate
from gpcert.sim.plants import PneumaticPlant, cubic_plant

UNIT = PlantModel(lambda y, t: 0.0, lambda y, t: 1.0, lambda y, t: 1.0)


def test_control_law_example():
    assert control_input(1.0, 1.5, 0.0, 1.0, 1.0, UNIT, K_P=1.0) == pytest.approx(-1.5)


@pytest.mark.parametrize("y", [0.8, 1.7, 3.0])
def test_exact_model_cancels_dynamics(y):
    plant = cubic_plant()
    z = 2.3
    u = control_input(y, y, 0.0, 1.0, z - 1.0, plant, K_P=10.0)
    assert plant.rhs(y, u, z, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_singular_gain():
    with pytest.raises(SingularGainError):
        control_input(0.0, 1.0, 0.0, 0.0, 0.0, cubic_plant(), K_P=1.0)


def test_zbar_update_examples():
    s = ControllerState(0.4, 10.0, 20.0)
    assert update_zbar(s, 0.0, 3.0, 1e-3).z_bar == 0.4
    assert update_zbar(ControllerState(0.0, 10.0, 20.0), 1.0, 1.0, 1e-3).z_bar == pytest.approx(-0.02)
    with pytest.raises(ValueError):
        ControllerState(0.0, -1.0, 1.0)


def test_constant_disturbance_is_absorbed_by_zbar():
    plant, c, y_r, K_P, K_I = cubic_plant(), 3.0, 2.0, 10.0, 20.0

    def rhs(t, x):
        y, zb = x
        u = control_input(y, y_r, 0.0, zb, 0.0, plant, K_P)
        return [plant.rhs(y, u, c, t), -K_I * plant.e(y, t) * (y_r - y)]

    _, X = integrate(rhs, [1.5, 0.0], 0.0, 20.0, 1e-3)
    assert abs(y_r - X[-1, 0]) < 1e-8
    assert X[-1, 1] == pytest.approx(c, abs=1e-6)


def test_benchmark_bound_design():
    bc = derive_bound_config(cubic_plant(), (1.11, 9.89), 0.11, 10.0, 20.0, zdot_inf=0.0)
    assert bc.gain_band.e_minus == pytest.approx(1.0) and bc.gain_band.e_plus == pytest.approx(10.0)
    assert bc.gamma == pytest.approx(0.2653, rel=0.05)
    assert bc.z_lim == pytest.approx(0.11 / bc.gamma)


def test_constant_gain_collapses_band():
    plant = PlantModel(lambda y, t: 0.0, lambda y, t: 1.0, lambda y, t: 2.0)
    bc = derive_bound_config(plant, (0.0, 1.0), 0.1, 10.0, 20.0)
    assert bc.gain_band.degenerate
    assert np.isfinite(bc.gamma)


def test_pneumatic_band_matches_experimental_offdiagonals():
    p = PneumaticPlant()
    e1, e3 = p.e_gain(1.0), p.e_gain(3.0)
    assert e1 == pytest.approx(-0.0665, rel=5e-3)
    assert e3 == pytest.approx(-0.1152, rel=5e-3)
    assert -1000.0 * e1 == pytest.approx(66.5359, rel=5e-3)


def test_bound_config_consistency_check(cert_bench):
    from gpcert.model_core import GainBand

    with pytest.raises(ValueError):
        BoundConfig((1.0, 2.0), 0.1, GainBand(1, 10), cert_bench.gamma, 123.0, 0.0, cert_bench)
