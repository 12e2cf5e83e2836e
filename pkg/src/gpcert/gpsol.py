"""Online Gaussian-process submodel learning on a fixed basis grid.

The hidden function is represented by its values ``mu`` at a grid of basis
points with covariance ``C``.  Predictions at a query ``zeta`` use the
squared-exponential kernel ``k``:

    J     = k(zeta, X) K^-1
    mean  = J mu
    var   = k(zeta, zeta) - J k(X, zeta) + J C J^T

Learning is indirect: the basis means are appended to the plant state and a
joint extended Kalman filter is run on the Euler-discretised plant

    y[k+1] = y[k] + T_s (a + b u + e J mu)

with the output ``y`` as the only measurement.  After each correction the
diagonal of ``C`` is projected into ``[sigma_r^2, sigma_K^2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import NumericalFailure
from .model_core import PlantModel


@njit(cache=True)
def _kvec(X, zeta, sigma_K, ell):
    N = X.shape[0]
    out = np.empty(N)
    for i in range(N):
        d2 = 0.0
        for j in range(X.shape[1]):
            r = (X[i, j] - zeta[j]) / ell[j]
            d2 += r * r
        out[i] = sigma_K * sigma_K * math.exp(-0.5 * d2)
    return out


@njit(cache=True)
def _predict_core(X, Kinv, mu, C, sigma_K, ell, sigma_r, zeta):
    kx = _kvec(X, zeta, sigma_K, ell)
    J = Kinv @ kx  # Kinv symmetric
    mean = J @ mu
    resid = sigma_K * sigma_K - J @ kx
    if resid < 0.0:
        resid = 0.0
    var = resid + J @ (C @ J)
    lo = sigma_r * sigma_r
    hi = sigma_K * sigma_K
    if var < lo:
        var = lo
    elif var > hi:
        var = hi
    return mean, var, resid, J


@njit(cache=True)
def _clamp_and_symmetrize(S, lo, hi):
    n = S.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            v = 0.5 * (S[i, j] + S[j, i])
            S[i, j] = v
            S[j, i] = v
    # basis block occupies indices 1..n-1
    for i in range(1, n):
        d = S[i, i]
        if d > hi:
            f = math.sqrt(hi / d)
            for j in range(n):
                S[i, j] *= f
                S[j, i] *= f
    for i in range(1, n):
        if S[i, i] < lo:
            S[i, i] = lo


@njit(cache=True)
def _ekf_update(s, S, X, Kinv, sigma_K, ell, sigma_r, y_meas, u, zeta, T_s, Q_x, R, av, bv, ev, dav, dbv, dev):
    """One predict/correct cycle on ``(s, S)`` in place.  Returns 0 on success.

    ``av, bv, ev`` are the plant terms at the current estimate and ``dav,
    dbv, dev`` their derivatives with respect to ``y``.
    """
    n = s.shape[0]
    y = s[0]
    mean, var, resid, J = _predict_core(X, Kinv, s[1:], np.ascontiguousarray(S[1:, 1:]), sigma_K, ell, sigma_r, zeta)
    dfdy = dav + dbv * u + dev * mean
    # predict
    F = np.eye(n)
    F[0, 0] = 1.0 + T_s * dfdy
    for i in range(1, n):
        F[0, i] = T_s * ev * J[i - 1]
    s[0] = y + T_s * (av + bv * u + ev * mean)
    Sp = F @ S @ F.T
    Sp[0, 0] += Q_x + (T_s * ev) ** 2 * resid
    # correct
    innov_var = Sp[0, 0] + R
    if not (innov_var > 0.0) or not math.isfinite(innov_var):
        return 1
    gain = Sp[:, 0] / innov_var
    r = y_meas - s[0]
    for i in range(n):
        s[i] += gain[i] * r
    for i in range(n):
        for j in range(n):
            S[i, j] = Sp[i, j] - gain[i] * gain[j] * innov_var
    _clamp_and_symmetrize(S, sigma_r * sigma_r, sigma_K * sigma_K)
    for i in range(n):
        if not math.isfinite(s[i]):
            return 1
    return 0


def _terms(f, y: float, t: float) -> tuple[float, float]:
    h = 1e-6 * max(1.0, abs(y))
    return float(f(y, t)), (float(f(y + h, t)) - float(f(y - h, t))) / (2.0 * h)


@dataclass(frozen=True)
class GpGridModel:
    """Basis-grid GP: means ``mu`` and covariance ``C`` at ``basis_points``."""

    basis_points: np.ndarray
    mu: np.ndarray
    C: np.ndarray
    sigma_K: float
    length_scale: np.ndarray
    sigma_r: float
    bounds: tuple[tuple[float, float], ...]
    K_inv: np.ndarray | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.basis_points, dtype=float))
        object.__setattr__(self, "basis_points", X)
        object.__setattr__(self, "mu", np.asarray(self.mu, dtype=float))
        object.__setattr__(self, "C", np.asarray(self.C, dtype=float))
        object.__setattr__(self, "length_scale", np.atleast_1d(np.asarray(self.length_scale, dtype=float)))
        if self.K_inv is None:
            K = gram(X, X, self.sigma_K, self.length_scale)
            object.__setattr__(self, "K_inv", np.linalg.inv(K))

    @property
    def n_basis(self) -> int:
        return self.basis_points.shape[0]

    def prior_gram(self) -> np.ndarray:
        return gram(self.basis_points, self.basis_points, self.sigma_K, self.length_scale)


class GpPrediction(NamedTuple):
    mean: float
    var: float
    extrapolated: bool


def gram(X1, X2, sigma_K: float, length_scale) -> np.ndarray:
    ell = np.atleast_1d(np.asarray(length_scale, dtype=float))
    d = (np.atleast_2d(X1)[:, None, :] - np.atleast_2d(X2)[None, :, :]) / ell
    return sigma_K**2 * np.exp(-0.5 * np.sum(d * d, axis=-1))


def init_grid(bounds, N1: int, sigma_K: float, L, sigma_r: float | None = None) -> GpGridModel:
    """Uniform ``N1``-per-dimension grid with zero mean and prior covariance.

    ``bounds`` is a sequence of ``(lo, hi)`` pairs, or a single pair for a
    scalar input.  ``sigma_r`` defaults to ``1e-3 * sigma_K``.
    """
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    if N1 < 2:
        raise ValueError("N1 must be at least 2")
    if np.any(bounds[:, 0] >= bounds[:, 1]):
        raise ValueError(f"invalid bounds {bounds.tolist()}")
    if not sigma_K > 0:
        raise ValueError("sigma_K must be positive")
    sigma_r = 1e-3 * sigma_K if sigma_r is None else float(sigma_r)
    if not 0 < sigma_r < sigma_K:
        raise ValueError("need 0 < sigma_r < sigma_K")
    ell = np.broadcast_to(np.asarray(L, dtype=float), (bounds.shape[0],)).copy()
    if np.any(ell <= 0):
        raise ValueError("length scale must be positive")
    axes = [np.linspace(lo, hi, N1) for lo, hi in bounds]
    X = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
    K = gram(X, X, sigma_K, ell)
    return GpGridModel(
        basis_points=X,
        mu=np.zeros(len(X)),
        C=K.copy(),
        sigma_K=float(sigma_K),
        length_scale=ell,
        sigma_r=sigma_r,
        bounds=tuple((float(lo), float(hi)) for lo, hi in bounds),
        K_inv=np.linalg.inv(K),
    )


def gp_predict(gp: GpGridModel, zeta) -> GpPrediction:
    """Gaussian prediction at ``zeta``; variance clamped to ``[sigma_r^2, sigma_K^2]``."""
    z = np.atleast_1d(np.asarray(zeta, dtype=float))
    X = gp.basis_points
    outside = bool(np.any(z < X.min(axis=0)) or np.any(z > X.max(axis=0)))
    mean, var, _, _ = _predict_core(X, gp.K_inv, gp.mu, gp.C, gp.sigma_K, gp.length_scale, gp.sigma_r, z)
    return GpPrediction(float(mean), float(var), outside)


@dataclass(frozen=True)
class LearnerState:
    """Joint filter state over ``(y_est, mu)`` with covariance ``S``."""

    gp: GpGridModel
    y_est: float
    S: np.ndarray
    Q_x: float = 1e-10
    R_meas: float = 1e-10

    @classmethod
    def initial(cls, gp: GpGridModel, y0: float, Q_x: float = 1e-10, R_meas: float = 1e-10) -> "LearnerState":
        n = gp.n_basis + 1
        S = np.zeros((n, n))
        S[0, 0] = R_meas
        S[1:, 1:] = gp.C
        return cls(gp, float(y0), S, float(Q_x), float(R_meas))

    def packed(self) -> np.ndarray:
        return np.concatenate([[self.y_est], self.gp.mu])


def learner_step(
    state: LearnerState,
    y_meas: float,
    u: float,
    zeta,
    plant: PlantModel,
    T_s: float,
    t: float = 0.0,
) -> LearnerState:
    """Advance the joint filter by one sample.

    ``u`` and ``zeta`` are the input and disturbance inputs applied over the
    interval that ends with the measurement ``y_meas``; ``t`` is the time at
    the start of that interval.
    """
    if not T_s > 0:
        raise ValueError("T_s must be positive")
    gp = state.gp
    s = state.packed()
    S = state.S.copy()
    z = np.atleast_1d(np.asarray(zeta, dtype=float))
    y = float(s[0])
    av, dav = _terms(plant.a, y, t)
    bv, dbv = _terms(plant.b, y, t)
    ev, dev = _terms(plant.e, y, t)
    code = _ekf_update(
        s, S, gp.basis_points, gp.K_inv, gp.sigma_K, gp.length_scale, gp.sigma_r,
        float(y_meas), float(u), z, float(T_s), state.Q_x, state.R_meas, av, bv, ev, dav, dbv, dev,
    )
    if code != 0:
        raise NumericalFailure("non-positive innovation covariance or non-finite state")
    new_gp = replace(gp, mu=s[1:].copy(), C=S[1:, 1:].copy())
    return replace(state, gp=new_gp, y_est=float(s[0]), S=S)
