"""Certified output-error bounds for adaptive control with online-learned GP submodels."""

from .errors import ConfigError, GpcertError, InfeasibleError, IntegrationError, NumericalFailure, SingularGainError
from .model_core import GainBand, PlantModel, PolytopeModel, build_error_polytope
from .lmi import LyapunovCertificate, bisect_delta, compute_hinf_gain, compute_p2p_gain

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "GainBand",
    "GpcertError",
    "InfeasibleError",
    "IntegrationError",
    "LyapunovCertificate",
    "NumericalFailure",
    "PlantModel",
    "PolytopeModel",
    "SingularGainError",
    "bisect_delta",
    "build_error_polytope",
    "compute_hinf_gain",
    "compute_p2p_gain",
]
