"""JSON configuration schema and its translation into runnable objects.

A document has the sections ``plant``, ``controller``, ``gpsol``, ``derl``,
``scenario`` and ``certification``.  Unknown keys are rejected everywhere.
"""

from __future__ import annotations

import json
import os
from importlib import resources
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .controller import BoundConfig, derive_bound_config
from .derl import sigma_fac_for
from .errors import ConfigError
from .model_core import GainBand, PlantModel, PolytopeModel, build_error_polytope, gain_band_from_grid
from .sim.harness import CubicPlant, GpSettings, ScenarioConfig
from .sim.plants import PneumaticPlant, cubic_plant
from .sim.signals import RampSignalSpec, StepSignalSpec

FIXTURE_ENV = "GPCERT_FIXTURES"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PlantSection(_Section):
    kind: Literal["cubic", "pneumatic", "none"] = "none"
    R_gas: float = 0.2871
    T0: float = 293.15
    V_tank: float = 4e-4
    p_in: float = 4.0
    p_U: float = 0.0
    epsilon_reg: float = 1.0
    k_v: float = 2.5e-4
    z_max: float = 5.0
    z_mid: float = 2.5
    z_width: float = 0.6

    def build(self) -> CubicPlant | PneumaticPlant:
        if self.kind == "cubic":
            return CubicPlant()
        if self.kind == "pneumatic":
            return PneumaticPlant(**self.model_dump(exclude={"kind"}))
        raise ConfigError("plant.kind is 'none'; a plant is required here")

    def model(self) -> PlantModel:
        p = self.build()
        return cubic_plant() if isinstance(p, CubicPlant) else p.model()


class ControllerSection(_Section):
    K_P: float = Field(gt=0)
    K_I: float = Field(gt=0)
    mode: Literal["continuous", "sampled"] = "continuous"


class GpsolSection(_Section):
    enabled: bool = False
    N1: int = Field(6, ge=2)
    bounds: tuple[float, float] = (0.0, 5.0)
    sigma_K: float = Field(1.0, gt=0)
    length_scale: float = Field(2.5, gt=0)
    sigma_r: float = Field(1e-4, gt=0)
    Q_x: float = Field(1e-10, ge=0)
    R_meas: float = Field(1e-10, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if not self.bounds[0] < self.bounds[1]:
            raise ValueError("gpsol.bounds must be increasing")
        if not self.sigma_r < self.sigma_K:
            raise ValueError("need sigma_r < sigma_K")
        return self


class DerlSection(_Section):
    enabled: bool = False
    sigma_fac: float | None = Field(None, gt=0)
    p_lim: float | None = Field(None, gt=0, lt=1)
    e_y_lim: float | None = Field(None, gt=0)
    zdot_inf: float = Field(0.0, ge=0)
    z_lim: float | None = Field(None, ge=0)

    @model_validator(mode="after")
    def _check(self):
        if self.sigma_fac is not None and self.p_lim is not None:
            raise ValueError("give either derl.sigma_fac or derl.p_lim, not both")
        return self

    @property
    def effective_sigma_fac(self) -> float:
        if self.p_lim is not None:
            return sigma_fac_for(self.p_lim)
        return 5.0 if self.sigma_fac is None else self.sigma_fac


class ScenarioSection(_Section):
    T_s: float = Field(1e-3, gt=0)
    duration: float = Field(gt=0)
    seed: int = 0
    substeps: int = Field(10, ge=1)
    reference: StepSignalSpec
    disturbance: RampSignalSpec | None = None
    zeta: StepSignalSpec | None = None
    z_hat_signal: RampSignalSpec | None = None
    x0: tuple[float, float] = (0.0, 0.0)
    y_r_range: tuple[float, float] | None = None
    early_fraction: float = Field(0.05, gt=0, le=1)
    bound_atol: float = Field(1e-6, ge=0)

    @property
    def effective_y_r_range(self) -> tuple[float, float] | None:
        if self.y_r_range is not None:
            return self.y_r_range
        ref = self.reference
        if ref.kind == "uniform_steps":
            return (ref.lo, ref.hi)
        return (ref.value, ref.value)


class CertificationSection(_Section):
    vertices: list[list[list[float]]] | None = None
    b_in: list[float] = [0.0, 1.0]
    c_out: list[float] = [1.0, 0.0]
    gain_band: tuple[float, float] | None = None
    delta_range: tuple[float, float] | None = None
    tol: float = Field(1e-3, gt=0)
    grid_points: int = Field(50, ge=3)
    n_grid: int = Field(1000, ge=2)
    hinf: bool = True


class ConfigFile(_Section):
    plant: PlantSection = PlantSection()
    controller: ControllerSection | None = None
    gpsol: GpsolSection = GpsolSection()
    derl: DerlSection = DerlSection()
    scenario: ScenarioSection | None = None
    certification: CertificationSection = CertificationSection()

    # -- certification -------------------------------------------------
    def polytope(self) -> tuple[PolytopeModel, list[str]]:
        """Polytope to certify, plus warnings about its consistency."""
        from .model_core import check_error_polytope_consistency

        cert = self.certification
        if cert.vertices is not None:
            try:
                poly = PolytopeModel(tuple(np.array(v) for v in cert.vertices), cert.b_in, cert.c_out)
            except ValueError as exc:
                raise ConfigError(f"certification.vertices: {exc}") from exc
            return poly, check_error_polytope_consistency(poly)
        band = self.gain_band()
        poly = build_error_polytope(self.controller.K_P, self.controller.K_I, band).with_output(cert.c_out)
        return poly, list(poly.flags)

    def gain_band(self) -> GainBand:
        if self.controller is None:
            raise ConfigError("a 'controller' section is required to build the error polytope")
        cert = self.certification
        if cert.gain_band is not None:
            try:
                return GainBand(*cert.gain_band)
            except ValueError as exc:
                raise ConfigError(f"certification.gain_band: {exc}") from exc
        if self.plant.kind == "none":
            raise ConfigError("need certification.vertices, certification.gain_band or a plant")
        lo, hi = self._design_range()
        return gain_band_from_grid(self.plant.model().e, (lo, hi), n_grid=cert.n_grid)

    def _design_range(self) -> tuple[float, float]:
        if self.scenario is None or self.scenario.effective_y_r_range is None:
            raise ConfigError("the gain band needs scenario.y_r_range or a uniform reference")
        lo, hi = self.scenario.effective_y_r_range
        e = self.derl.e_y_lim or 0.0
        return lo - e, hi + e

    # -- simulation ------------------------------------------------------
    def bound_config(self) -> BoundConfig | None:
        """Certified bound used for violation counting and DERL, if ``e_y_lim`` is set."""
        if self.derl.e_y_lim is None or self.controller is None or self.scenario is None:
            return None
        from .derl import compute_zlim
        from .lmi import bisect_delta

        cert = self.certification
        if cert.vertices is None and cert.gain_band is None:
            lo, hi = self.scenario.effective_y_r_range
            return derive_bound_config(
                self.plant.model(), (lo, hi), self.derl.e_y_lim, self.controller.K_P, self.controller.K_I,
                zdot_inf=self.derl.zdot_inf, tol=cert.tol, n_grid=cert.n_grid,
            )
        poly, _ = self.polytope()
        c = bisect_delta(poly, cert.delta_range, tol=cert.tol, grid_points=cert.grid_points)
        band = self.gain_band() if cert.vertices is None else _band_of(poly)
        lo, hi = self.scenario.effective_y_r_range
        return BoundConfig(
            y_r_range=(float(lo), float(hi)),
            e_y_lim=self.derl.e_y_lim,
            gain_band=band,
            gamma=c.gamma,
            z_lim=compute_zlim(self.derl.e_y_lim, c.gamma, self.derl.zdot_inf),
            zdot_inf=self.derl.zdot_inf,
            certificate=c,
        )

    def scenario_config(self, seed: int | None = None, bound_config: BoundConfig | None | str = "auto") -> ScenarioConfig:
        if self.scenario is None:
            raise ConfigError("a 'scenario' section is required to simulate")
        if self.controller is None:
            raise ConfigError("a 'controller' section is required to simulate")
        sc = self.scenario
        g = self.gpsol
        bc = self.bound_config() if bound_config == "auto" else bound_config
        try:
            return ScenarioConfig(
                plant=self.plant.build(),
                K_P=self.controller.K_P,
                K_I=self.controller.K_I,
                reference=sc.reference,
                T_s=sc.T_s,
                duration=sc.duration,
                seed=sc.seed if seed is None else int(seed),
                disturbance=sc.disturbance,
                zeta=sc.zeta,
                z_hat_signal=sc.z_hat_signal,
                gpsol_on=g.enabled,
                derl_on=self.derl.enabled,
                gp=GpSettings(g.N1, tuple(g.bounds), g.sigma_K, g.length_scale, g.sigma_r, g.Q_x, g.R_meas),
                sigma_fac=self.derl.effective_sigma_fac,
                z_lim=self.derl.z_lim,
                bound_config=bc,
                x0=tuple(sc.x0),
                substeps=sc.substeps,
                controller_mode=self.controller.mode,
                early_fraction=sc.early_fraction,
                bound_atol=sc.bound_atol,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _band_of(poly: PolytopeModel) -> GainBand:
    es = [v[0, 1] for v in poly.vertices]
    return GainBand(min(es), max(es))


def parse_config(data: dict[str, Any]) -> ConfigFile:
    try:
        return ConfigFile.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def fixture_dir() -> Path:
    env = os.environ.get(FIXTURE_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("gpcert") / "fixtures"))


def resolve_config_path(ref: str | os.PathLike) -> Path:
    """A filesystem path, or the name of a shipped fixture (with or without ``.json``)."""
    p = Path(ref)
    if p.is_file():
        return p
    root = fixture_dir()
    for cand in (root / str(ref), root / f"{ref}.json"):
        if cand.is_file():
            return cand
    raise ConfigError(f"config {str(ref)!r} not found (fixture root {root})")


def load_config(ref: str | os.PathLike) -> ConfigFile:
    path = resolve_config_path(ref)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_config(data)


def set_param(data: dict, dotted: str, value: Any) -> dict:
    """Copy of ``data`` with ``section.key[.sub]`` set to ``value``; the path must exist in the schema."""
    parts = dotted.split(".")
    if len(parts) < 2:
        raise ConfigError(f"parameter {dotted!r} must look like 'section.key'")
    out = json.loads(json.dumps(data))
    node = out
    model: Any = ConfigFile
    for i, key in enumerate(parts):
        fields = getattr(model, "model_fields", None)
        if fields is None or key not in fields:
            raise ConfigError(f"unknown parameter {dotted!r}")
        ann = fields[key].annotation
        model = _model_in(ann)
        if i == len(parts) - 1:
            node[key] = value
        else:
            if node.get(key) is None:
                node[key] = {}
            node = node[key]
    return out


def _model_in(ann):
    if isinstance(ann, type) and issubclass(ann, BaseModel):
        return ann
    for a in getattr(ann, "__args__", ()) or ():
        if isinstance(a, type) and issubclass(a, BaseModel):
            return a
    return None
