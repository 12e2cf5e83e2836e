"""Closed-loop simulation: integrator, test signals, plants and the run harness."""

from .harness import (
    AblationRow,
    CubicPlant,
    GpSettings,
    RunMetrics,
    ScenarioConfig,
    Variant,
    run_ablation_suite,
    run_batch,
    run_scenario,
    write_run,
)
from .integrate import integrate, rk4_step
from .plants import PneumaticPlant, cubic_plant, pneumatic_rhs, psi
from .signals import RampSignalSpec, StepSignalSpec, generate_disturbance, generate_reference

__all__ = [
    "AblationRow",
    "CubicPlant",
    "GpSettings",
    "PneumaticPlant",
    "RampSignalSpec",
    "RunMetrics",
    "ScenarioConfig",
    "StepSignalSpec",
    "Variant",
    "cubic_plant",
    "generate_disturbance",
    "generate_reference",
    "integrate",
    "pneumatic_rhs",
    "psi",
    "rk4_step",
    "run_ablation_suite",
    "run_batch",
    "run_scenario",
    "write_run",
]
