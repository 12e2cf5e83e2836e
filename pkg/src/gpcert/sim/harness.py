"""Seeded closed-loop simulation of plant, adaptive controller, GP learner and DERL.

The loop runs in a compiled kernel.  The plant is integrated with RK4 at
``T_s / substeps``.  In the default ``continuous`` controller mode the
control law and the parameter update are evaluated at every integrator
stage, so the discretisation error is that of the integrator only; the
``sampled`` mode holds ``u`` over each sample and updates ``z_bar`` by an
Euler step.  The GP learner and DERL run once per sample.  Their output is
applied as a first-order hold delayed by one sample, which makes the applied
rate of ``z_hat`` exactly the DERL increment divided by ``T_s``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from numba import njit

from ..controller import B_MIN, BoundConfig
from ..derl import p_lim_for
from ..errors import IntegrationError, NumericalFailure, SingularGainError
from ..gpsol import _ekf_update, _predict_core, init_grid
from .plants import PA_PER_BAR, Z_UNIT, PneumaticPlant, psi
from .signals import RampSignalSpec, StepSignalSpec, eval_filtered, eval_ramp

CSV_COLUMNS = ("t", "y", "y_r", "u", "z", "z_tilde", "z_hat", "z_bar", "e_y", "V")

PLANT_CUBIC = 0
PLANT_PNEUMATIC = 1

Z_DIRECT = 0
Z_HIDDEN = 1

ZHAT_SIGNAL = 0
ZHAT_GP = 1
ZHAT_NONE = 2

OK = 0
FAIL_INTEGRATION = 1
FAIL_SINGULAR = 2
FAIL_FILTER = 3


@dataclass(frozen=True)
class CubicPlant:
    """Benchmark plant ``y' = -1 + y^3 + y^3 u + y z``; it has no hidden function."""

    def to_dict(self) -> dict:
        return {}


@dataclass(frozen=True)
class GpSettings:
    N1: int = 6
    bounds: tuple[float, float] = (0.0, 5.0)
    sigma_K: float = 1.0
    length_scale: float = 2.5
    sigma_r: float = 1e-4
    Q_x: float = 1e-10
    R_meas: float = 1e-10


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce one closed-loop run.

    ``disturbance`` drives ``z`` directly; otherwise ``zeta`` drives the
    plant's hidden function.  ``z_hat_signal`` supplies an external estimate
    in place of the learner (used to test the bounds in isolation).
    """

    plant: CubicPlant | PneumaticPlant
    K_P: float
    K_I: float
    reference: StepSignalSpec
    T_s: float
    duration: float
    seed: int = 0
    disturbance: RampSignalSpec | None = None
    zeta: StepSignalSpec | None = None
    z_hat_signal: RampSignalSpec | None = None
    gpsol_on: bool = False
    derl_on: bool = False
    gp: GpSettings = field(default_factory=GpSettings)
    sigma_fac: float = 5.0
    z_lim: float | None = None
    bound_config: BoundConfig | None = None
    x0: tuple[float, float] = (0.0, 0.0)
    substeps: int = 10
    controller_mode: Literal["continuous", "sampled"] = "continuous"
    early_fraction: float = 0.05
    bound_atol: float = 1e-6

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.T_s > 0:
            raise ValueError("T_s must be positive")
        if not (self.K_P > 0 and self.K_I > 0):
            raise ValueError("controller gains must be positive")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")
        if (self.disturbance is None) == (self.zeta is None):
            raise ValueError("exactly one of 'disturbance' and 'zeta' must be given")
        if self.zeta is not None and not isinstance(self.plant, PneumaticPlant):
            raise ValueError("a hidden-function input needs a plant with a hidden function")
        if self.gpsol_on and self.zeta is None:
            raise ValueError("the GP learner needs a hidden-function input 'zeta'")
        if self.gpsol_on and self.z_hat_signal is not None:
            raise ValueError("'z_hat_signal' and gpsol_on are mutually exclusive")
        if self.derl_on and not self.gpsol_on:
            raise ValueError("DERL filters the GP output; enable gpsol_on")
        if self.derl_on and self.effective_z_lim is None:
            raise ValueError("DERL needs z_lim or a bound_config")
        if self.controller_mode not in ("continuous", "sampled"):
            raise ValueError(f"unknown controller_mode {self.controller_mode!r}")
        if not 0.0 < self.early_fraction <= 1.0:
            raise ValueError("early_fraction must lie in (0, 1]")

    @property
    def effective_z_lim(self) -> float | None:
        if self.z_lim is not None:
            return float(self.z_lim)
        if self.bound_config is not None:
            return self.bound_config.z_lim
        return None

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.T_s))

    def to_dict(self) -> dict:
        """Effective configuration with all defaults resolved."""
        bc = self.bound_config
        return {
            "plant": {"kind": _plant_kind_name(self.plant), **self.plant.to_dict()},
            "controller": {"K_P": self.K_P, "K_I": self.K_I, "mode": self.controller_mode},
            "reference": self.reference.model_dump(),
            "disturbance": None if self.disturbance is None else self.disturbance.model_dump(),
            "zeta": None if self.zeta is None else self.zeta.model_dump(),
            "z_hat_signal": None if self.z_hat_signal is None else self.z_hat_signal.model_dump(),
            "T_s": self.T_s,
            "duration": self.duration,
            "seed": self.seed,
            "substeps": self.substeps,
            "gpsol_on": self.gpsol_on,
            "derl_on": self.derl_on,
            "gp": {**self.gp.__dict__, "bounds": list(self.gp.bounds)},
            "sigma_fac": self.sigma_fac,
            "p_lim": p_lim_for(self.sigma_fac),
            "z_lim": self.effective_z_lim,
            "x0": list(self.x0),
            "early_fraction": self.early_fraction,
            "bound_atol": self.bound_atol,
            "bound": None
            if bc is None
            else {
                "y_r_range": list(bc.y_r_range),
                "e_y_lim": bc.e_y_lim,
                "gain_band": [bc.gain_band.e_minus, bc.gain_band.e_plus],
                "gamma": bc.gamma,
                "delta": bc.certificate.delta,
                "P": bc.certificate.P.tolist(),
                "zdot_inf": bc.zdot_inf,
                "z_lim": bc.z_lim,
            },
        }


@dataclass
class RunMetrics:
    e_y_inf: float
    cae: float
    cae_early: float
    zdot_e_inf: float
    bound_violations: int
    envelope_violations: int
    gp_var_min: float
    gp_var_max: float
    n_probabilistic: int
    n_deterministic: int
    seed: int
    time_series: dict[str, np.ndarray] = field(repr=False)
    config: dict = field(default_factory=dict, repr=False)

    def summary(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k not in ("time_series", "config")}
        for k, v in out.items():
            if isinstance(v, (np.floating, np.integer)):
                out[k] = v.item()
            if isinstance(out[k], float) and not math.isfinite(out[k]):
                out[k] = None
        return out

    def to_dict(self) -> dict:
        return {"metrics": self.summary(), "config": self.config}

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        cols = [self.time_series[c] for c in CSV_COLUMNS]
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _plant_kind_name(plant) -> str:
    return "pneumatic" if isinstance(plant, PneumaticPlant) else "cubic"


def plant_params(plant) -> tuple[int, np.ndarray]:
    """Kernel encoding of a plant as ``(kind, params)``."""
    if isinstance(plant, PneumaticPlant):
        prm = np.array(
            [plant.b_gain, plant.p_U, plant.epsilon_reg, plant.z_max, plant.z_mid, plant.z_width, -plant.b_gain * Z_UNIT]
        )
        return PLANT_PNEUMATIC, prm
    if isinstance(plant, CubicPlant):
        return PLANT_CUBIC, np.zeros(7)
    raise TypeError(f"unsupported plant type {type(plant).__name__}")


@njit(cache=True)
def _abe(kind, prm, y):
    if kind == PLANT_CUBIC:
        y3 = y * y * y
        return -1.0 + y3, y3, y
    return 0.0, prm[0], prm[6] * psi((y - prm[1]) * PA_PER_BAR, prm[2])


@njit(cache=True)
def _hidden(kind, prm, zeta):
    if kind == PLANT_PNEUMATIC:
        return prm[3] / (1.0 + math.exp(-(zeta - prm[4]) / prm[5]))
    return 0.0


@njit(cache=True)
def _deriv(tau, t_seg, y, zb, kind, prm, ref, zsig, z_kind, zhs, zh_kind, zh0, zh1, t_k, T_s,
           K_P, K_I, continuous, u_hold):
    yr, ydr = eval_filtered(tau, ref[0], ref[1], ref[2], ref[3], t_seg)
    if z_kind == Z_DIRECT:
        z, _ = eval_ramp(tau, zsig[0], zsig[1], zsig[2], zsig[3], t_seg)
    else:
        zeta, _ = eval_filtered(tau, zsig[0], zsig[1], zsig[2], zsig[3], t_seg)
        z = _hidden(kind, prm, zeta)
    if zh_kind == ZHAT_SIGNAL:
        zh, _ = eval_ramp(tau, zhs[0], zhs[1], zhs[2], zhs[3], t_seg)
    elif zh_kind == ZHAT_GP:
        if continuous:
            zh = zh0 + (zh1 - zh0) * (tau - t_k) / T_s
        else:
            zh = zh0
    else:
        zh = 0.0
    av, bv, ev = _abe(kind, prm, y)
    e_y = yr - y
    if continuous:
        if abs(bv) < B_MIN:
            return math.nan, math.nan, math.nan, math.nan, math.nan
        u = (ydr + K_P * e_y - av - ev * (zb + zh)) / bv
        dzb = -K_I * ev * e_y
    else:
        u = u_hold
        dzb = 0.0
    return av + bv * u + ev * z, dzb, u, zh - z, z


@njit(cache=True)
def _kernel(
    kind, prm, ref, zsig, z_kind, zhs, zh_kind,
    derl_on, z_lim, sigma_fac,
    X, Kinv, mu0, C0, sigma_K, ell, sigma_r, Q_x, R_meas, zeta_sig,
    K_P, K_I, T_s, n_sub, n_steps, continuous, ey0, ez0,
    out_t, out_y, out_yr, out_u, out_z, out_zt, out_w, out_zb, out_ey, out_ez, out_sup,
):
    h = T_s / n_sub
    nb = X.shape[0]
    use_gp = zh_kind == ZHAT_GP
    s = np.zeros(nb + 1)
    S = np.zeros((nb + 1, nb + 1))
    zeta_arr = np.zeros(1)
    zt = math.nan
    var_prev = 0.0
    zh0 = 0.0
    zh1 = 0.0
    var_min = math.inf
    var_max = -math.inf
    n_prob = 0
    n_det = 0
    # initial state from (e_y, e_z)
    yr, _ = eval_filtered(0.0, ref[0], ref[1], ref[2], ref[3], 0.0)
    y = yr - ey0
    if use_gp:
        zeta_arr[0] = eval_filtered(0.0, zeta_sig[0], zeta_sig[1], zeta_sig[2], zeta_sig[3], 0.0)[0]
        mean, var, _, _ = _predict_core(X, Kinv, mu0, C0, sigma_K, ell, sigma_r, zeta_arr)
        zt = mean
        var_prev = var
        zh0 = mean
        zh1 = mean
        s[0] = y
        s[1:] = mu0
        S[0, 0] = R_meas
        S[1:, 1:] = C0
        for i in range(nb):
            d = C0[i, i]
            if d < var_min:
                var_min = d
            if d > var_max:
                var_max = d
    _, _, _, w0, _ = _deriv(0.0, 0.0, y, 0.0, kind, prm, ref, zsig, z_kind, zhs, zh_kind, zh0, zh1, 0.0, T_s,
                         K_P, K_I, True, 0.0)
    zb = ez0 - w0  # e_z = z_bar + z_hat - z
    sup = 0.0
    for k in range(n_steps + 1):
        t_k = k * T_s
        dy, dzb, u, w, z_k = _deriv(t_k, t_k, y, zb, kind, prm, ref, zsig, z_kind, zhs, zh_kind, zh0, zh1, t_k, T_s,
                               K_P, K_I, True, 0.0)
        if not math.isfinite(u):
            return FAIL_SINGULAR, k, var_min, var_max, n_prob, n_det
        yr, _ = eval_filtered(t_k, ref[0], ref[1], ref[2], ref[3], t_k)
        out_t[k] = t_k
        out_y[k] = y
        out_yr[k] = yr
        out_u[k] = u
        out_zt[k] = zt
        out_zb[k] = zb
        out_ey[k] = yr - y
        out_ez[k] = zb + w
        out_sup[k] = sup
        out_w[k] = w
        out_z[k] = z_k
        if k == n_steps:
            break
        u_hold = u
        e_hold = _abe(kind, prm, y)[2]
        u_acc = 0.0
        for j in range(n_sub):
            tau = t_k + j * h
            k1y, k1z, u1, w_a, _ = _deriv(tau, tau, y, zb, kind, prm, ref, zsig, z_kind, zhs, zh_kind, zh0, zh1, t_k,
                                       T_s, K_P, K_I, continuous, u_hold)
            k2y, k2z, u2, _, _ = _deriv(tau + 0.5 * h, tau, y + 0.5 * h * k1y, zb + 0.5 * h * k1z, kind, prm, ref, zsig,
                                     z_kind, zhs, zh_kind, zh0, zh1, t_k, T_s, K_P, K_I, continuous, u_hold)
            k3y, k3z, u3, _, _ = _deriv(tau + 0.5 * h, tau, y + 0.5 * h * k2y, zb + 0.5 * h * k2z, kind, prm, ref, zsig,
                                     z_kind, zhs, zh_kind, zh0, zh1, t_k, T_s, K_P, K_I, continuous, u_hold)
            k4y, k4z, u4, w_b, _ = _deriv(tau + h, tau, y + h * k3y, zb + h * k3z, kind, prm, ref, zsig, z_kind, zhs,
                                       zh_kind, zh0, zh1, t_k, T_s, K_P, K_I, continuous, u_hold)
            y = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            zb = zb + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
            if math.isnan(u1 + u2 + u3 + u4):
                return FAIL_SINGULAR, k, var_min, var_max, n_prob, n_det
            if not (math.isfinite(y) and math.isfinite(zb)):
                return FAIL_INTEGRATION, k, var_min, var_max, n_prob, n_det
            u_acc += (u1 + 2.0 * u2 + 2.0 * u3 + u4) / 6.0
            # w = z_hat - z does not depend on the state; its mean slope over a
            # substep is a lower estimate of the error rate
            r = abs(w_b - w_a) / h
            if r > sup:
                sup = r
        if not continuous:
            zb = zb - T_s * K_I * e_hold * (out_ey[k])
        if use_gp:
            u_avg = u_acc / n_sub
            yk = s[0]
            av, bv, ev = _abe(kind, prm, yk)
            dd = 1e-6 * max(1.0, abs(yk))
            ap, bp, ep = _abe(kind, prm, yk + dd)
            am, bm, em = _abe(kind, prm, yk - dd)
            code = _ekf_update(s, S, X, Kinv, sigma_K, ell, sigma_r, y, u_avg, zeta_arr, T_s, Q_x, R_meas,
                               av, bv, ev, (ap - am) / (2 * dd), (bp - bm) / (2 * dd), (ep - em) / (2 * dd))
            if code != 0:
                return FAIL_FILTER, k, var_min, var_max, n_prob, n_det
            for i in range(1, nb + 1):
                d = S[i, i]
                if d < var_min:
                    var_min = d
                if d > var_max:
                    var_max = d
            t_n = t_k + T_s
            zeta_arr[0] = eval_filtered(t_n, zeta_sig[0], zeta_sig[1], zeta_sig[2], zeta_sig[3], t_n)[0]
            mean, var, _, _ = _predict_core(X, Kinv, s[1:], np.ascontiguousarray(S[1:, 1:]), sigma_K, ell, sigma_r, zeta_arr)
            zt = mean
            zh0 = zh1
            if derl_on:
                step = z_lim * T_s
                inc = mean - zh1
                if abs(inc) + sigma_fac * math.sqrt(var + var_prev) <= step:
                    zh1 = mean
                    n_prob += 1
                else:
                    if inc > step:
                        inc = step
                    elif inc < -step:
                        inc = -step
                    zh1 = zh1 + inc
                    n_det += 1
            else:
                zh1 = mean
            var_prev = var
    return OK, n_steps, var_min, var_max, n_prob, n_det


def _signal_arrays(sig) -> tuple:
    hold, par, targets, starts = sig.arrays()
    return float(hold), float(par), np.ascontiguousarray(targets, dtype=float), np.ascontiguousarray(starts, dtype=float)


def _kernel_inputs(cfg: ScenarioConfig):
    ss = np.random.SeedSequence(cfg.seed)
    r_ref, r_z, r_zh = (np.random.default_rng(c) for c in ss.spawn(3))
    horizon = cfg.duration + cfg.T_s
    ref = cfg.reference.build(r_ref, horizon)
    if cfg.disturbance is not None:
        z_kind, zsig = Z_DIRECT, cfg.disturbance.build(r_z, horizon)
    else:
        z_kind, zsig = Z_HIDDEN, cfg.zeta.build(r_z, horizon)
    if cfg.z_hat_signal is not None:
        zh_kind, zhs = ZHAT_SIGNAL, cfg.z_hat_signal.build(r_zh, horizon)
    elif cfg.gpsol_on:
        zh_kind, zhs = ZHAT_GP, RampSignalSpec(kind="zero").build(None, horizon)
    else:
        zh_kind, zhs = ZHAT_NONE, RampSignalSpec(kind="zero").build(None, horizon)
    return ref, z_kind, zsig, zh_kind, zhs


def run_scenario(cfg: ScenarioConfig) -> RunMetrics:
    """Simulate one seeded run and evaluate its metrics.

    Raises ``IntegrationError``, ``SingularGainError`` or ``NumericalFailure``
    (learner breakdown) on failure.
    """
    kind, prm = plant_params(cfg.plant)
    ref, z_kind, zsig, zh_kind, zhs = _kernel_inputs(cfg)
    if cfg.gpsol_on:
        g = cfg.gp
        gp = init_grid(g.bounds, g.N1, g.sigma_K, g.length_scale, g.sigma_r)
        X, Kinv, mu0, C0, ell = gp.basis_points, gp.K_inv, gp.mu, gp.C, gp.length_scale
        zeta_sig = _signal_arrays(zsig)
    else:
        g = cfg.gp
        X = np.zeros((1, 1))
        Kinv = np.eye(1)
        mu0 = np.zeros(1)
        C0 = np.eye(1)
        ell = np.ones(1)
        zeta_sig = (np.inf, 0.0, np.zeros(1), np.zeros(1))
    n = cfg.n_steps
    bufs = {name: np.empty(n + 1) for name in ("t", "y", "y_r", "u", "z", "z_tilde", "w", "z_bar", "e_y", "e_z", "sup")}
    z_lim = cfg.effective_z_lim if cfg.derl_on else 0.0
    status, k_fail, var_min, var_max, n_prob, n_det = _kernel(
        kind, prm, _signal_arrays(ref), _signal_arrays(zsig), z_kind, _signal_arrays(zhs), zh_kind,
        cfg.derl_on, float(z_lim), float(cfg.sigma_fac),
        X, Kinv, mu0, C0, float(g.sigma_K), ell, float(g.sigma_r), float(g.Q_x), float(g.R_meas), zeta_sig,
        float(cfg.K_P), float(cfg.K_I), float(cfg.T_s), int(cfg.substeps), n, cfg.controller_mode == "continuous",
        float(cfg.x0[0]), float(cfg.x0[1]),
        bufs["t"], bufs["y"], bufs["y_r"], bufs["u"], bufs["z"], bufs["z_tilde"], bufs["w"],
        bufs["z_bar"], bufs["e_y"], bufs["e_z"], bufs["sup"],
    )
    if status != OK:
        t_fail = k_fail * cfg.T_s
        if status == FAIL_SINGULAR:
            raise SingularGainError(f"|b(y)| below {B_MIN} near t={t_fail:.6g}")
        if status == FAIL_FILTER:
            raise NumericalFailure(f"GP learner diverged near t={t_fail:.6g}")
        raise IntegrationError(f"non-finite state near t={t_fail:.6g}")
    return _metrics(cfg, bufs, var_min, var_max, n_prob, n_det)


def _metrics(cfg, bufs, var_min, var_max, n_prob, n_det) -> RunMetrics:
    t = bufs["t"]
    z = bufs["z"]
    z_hat = bufs["w"] + z
    e_y = bufs["e_y"]
    abs_e = np.abs(e_y)
    cae = float(abs_e.sum() * cfg.T_s)
    n_early = max(1, int(round(cfg.early_fraction * (len(t) - 1))))
    cae_early = float(abs_e[:n_early].sum() * cfg.T_s)
    sup = bufs["sup"]
    bc = cfg.bound_config
    bound_viol = 0
    env_viol = 0
    V = np.full_like(t, np.nan)
    if bc is not None:
        tol = cfg.bound_atol
        bound_viol = int(np.count_nonzero(abs_e > bc.gamma * sup + tol))
        P = bc.certificate.P
        x = np.stack([e_y, bufs["e_z"]])
        V = np.einsum("in,ij,jn->n", x, P, x)
        delta = bc.certificate.delta
        env = np.exp(-delta * t) * V[0] + sup**2 / delta
        env_viol = int(np.count_nonzero(V > env * (1 + 1e-9) + tol))
    gp_min = var_min if cfg.gpsol_on else math.nan
    gp_max = var_max if cfg.gpsol_on else math.nan
    series = {
        "t": t,
        "y": bufs["y"],
        "y_r": bufs["y_r"],
        "u": bufs["u"],
        "z": z,
        "z_tilde": bufs["z_tilde"] if cfg.gpsol_on else np.full_like(t, np.nan),
        "z_hat": z_hat if (cfg.gpsol_on or cfg.z_hat_signal is not None) else np.zeros_like(t),
        "z_bar": bufs["z_bar"],
        "e_y": e_y,
        "V": V,
        "e_z": bufs["e_z"],
        "zdot_e_sup": sup,
    }
    return RunMetrics(
        e_y_inf=float(abs_e.max()),
        cae=cae,
        cae_early=cae_early,
        zdot_e_inf=float(sup[-1]),
        bound_violations=bound_viol,
        envelope_violations=env_viol,
        gp_var_min=float(gp_min),
        gp_var_max=float(gp_max),
        n_probabilistic=int(n_prob),
        n_deterministic=int(n_det),
        seed=int(cfg.seed),
        time_series=series,
        config=cfg.to_dict(),
    )


def run_batch(cfgs: Sequence[ScenarioConfig], n_jobs: int = 1) -> list[RunMetrics]:
    """Run independent scenarios, optionally in worker processes."""
    if n_jobs <= 1 or len(cfgs) <= 1:
        return [run_scenario(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(run_scenario, cfgs))


@dataclass(frozen=True)
class Variant:
    """Toggle and bound settings of one ablation variant."""

    name: str
    gpsol_on: bool
    derl_on: bool = False
    e_y_lim: float | None = None


@dataclass
class AblationRow:
    variant: str
    e_y_lim: float | None
    runs: int
    cae_mean: float
    cae_early_mean: float
    e_y_inf_max: float
    normalized_cae: float
    normalized_cae_early: float
    per_run_cae: list[float]

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _ratio(a: float, b: float) -> float:
    return a / b if b > 0 else math.nan


def run_ablation_suite(
    base: ScenarioConfig,
    variants: Sequence[Variant],
    runs: int,
    bound_for=None,
    n_jobs: int = 1,
) -> list[AblationRow]:
    """Average CAE per variant over ``runs`` seeds, normalised to the no-GP baseline.

    Run ``r`` of every variant uses seed ``base.seed + r`` so all variants see
    the same reference and disturbance trajectories; every run starts from a
    fresh GP prior.  ``bound_for(e_y_lim)`` must return a ``BoundConfig`` for
    variants that set ``e_y_lim``.  A no-GP baseline is added if missing.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    variants = list(variants)
    if not any(not v.gpsol_on for v in variants):
        variants.insert(0, Variant("baseline", gpsol_on=False))
    rows = []
    for v in variants:
        bc = None
        if v.e_y_lim is not None:
            if bound_for is None:
                raise ValueError(f"variant {v.name!r} sets e_y_lim but no bound_for was given")
            bc = bound_for(v.e_y_lim)
        cfgs = [
            replace(base, seed=base.seed + r, gpsol_on=v.gpsol_on, derl_on=v.derl_on, bound_config=bc,
                    z_lim=None if bc is not None else base.z_lim)
            for r in range(runs)
        ]
        ms = run_batch(cfgs, n_jobs)
        caes = [m.cae for m in ms]
        rows.append(
            AblationRow(
                variant=v.name,
                e_y_lim=v.e_y_lim,
                runs=runs,
                cae_mean=float(np.mean(caes)),
                cae_early_mean=float(np.mean([m.cae_early for m in ms])),
                e_y_inf_max=float(max(m.e_y_inf for m in ms)),
                normalized_cae=math.nan,
                normalized_cae_early=math.nan,
                per_run_cae=caes,
            )
        )
    base_row = next(r for r, v in zip(rows, variants) if not v.gpsol_on)
    for r in rows:
        r.normalized_cae = _ratio(r.cae_mean, base_row.cae_mean)
        r.normalized_cae_early = _ratio(r.cae_early_mean, base_row.cae_early_mean)
    return rows


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_run(metrics: RunMetrics, out_dir: str | os.PathLike, stem: str = "run") -> tuple[str, str]:
    """Write ``<stem>.csv`` and ``<stem>.json`` into ``out_dir``; returns both paths."""
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    json_path = os.path.join(out_dir, f"{stem}.json")
    atomic_write(csv_path, metrics.csv_text())
    atomic_write(json_path, json.dumps(metrics.to_dict(), indent=2, sort_keys=True) + "\n")
    return csv_path, json_path
