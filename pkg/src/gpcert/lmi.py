"""Lyapunov and peak-to-peak certificates for polytopic systems.

For a polytope ``x' = A(x, t) x + b u``, ``y = c^T x`` with ``A`` in the
convex hull of the vertices, a common ``P > 0`` satisfying

    [[-1, b^T P], [P b, A_l^T P + P A_l + delta P]] < 0      (every vertex)

gives ``V' < -delta V + u^2``.  Adding ``[[gbar, c^T], [c, P]] > 0`` and
minimising ``gbar`` yields the peak-to-peak gain ``gamma = sqrt(gbar/delta)``.
The LMIs are not jointly linear in ``delta``, so ``delta`` is searched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize_scalar

from .errors import InfeasibleError, NumericalFailure
from .model_core import PolytopeModel
from .sdp import LmiConstraint, LmiProblem, SdpSolution, SdpStatus, solve

log = logging.getLogger(__name__)

DELTA_LO = 1e-4
GRID_POINTS = 50


@lru_cache(maxsize=None)
def _sym_basis(n: int) -> np.ndarray:
    """Basis ``E_k`` of symmetric n x n matrices, upper-triangle ordering."""
    basis = []
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            E[i, j] = E[j, i] = 1.0
            basis.append(E)
    out = np.stack(basis)
    out.setflags(write=False)
    return out


def sym_from_vec(p: np.ndarray, n: int) -> np.ndarray:
    return np.tensordot(p, _sym_basis(n), axes=1)


def sym_dim(n: int) -> int:
    return n * (n + 1) // 2


@dataclass(frozen=True)
class LyapunovCertificate:
    P: np.ndarray
    delta: float
    gamma_bar: float
    gamma: float
    polytope: PolytopeModel
    solver: str | None = None

    def V(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.P @ x)

    def output_weight(self, c=None) -> float:
        """``c^T P^{-1} c`` via a Cholesky solve."""
        c = self.polytope.c_out if c is None else np.asarray(c, dtype=float)
        return float(c @ cho_solve(cho_factor(self.P), c))

    def to_dict(self) -> dict:
        return {
            "P": self.P.tolist(),
            "delta": self.delta,
            "gamma_bar": self.gamma_bar,
            "gamma": self.gamma,
        }


@dataclass(frozen=True)
class TrajectoryBound:
    certificate: LyapunovCertificate
    x0: np.ndarray
    u_inf: float
    c_query: np.ndarray | None = None

    def __post_init__(self):
        if self.u_inf < 0:
            raise ValueError("u_inf must be non-negative")
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))
        if self.c_query is not None:
            object.__setattr__(self, "c_query", np.asarray(self.c_query, dtype=float))


def assemble_stability_lmi(A: np.ndarray, b_in: np.ndarray, delta: float) -> LmiConstraint:
    """Negative-definite block ``[[-1, b^T P], [P b, A^T P + P A + delta P]]``.

    The decision vector holds the upper-triangle coordinates of ``P``.  By a
    Schur complement the block is negative definite iff
    ``A^T P + P A + P b b^T P + delta P < 0``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b_in, dtype=float).reshape(-1)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"dimension mismatch: A {A.shape}, b {b.shape}")
    if not delta > 0:
        raise ValueError("delta must be positive")
    basis = _sym_basis(n)
    F = np.zeros((len(basis) + 1, n + 1, n + 1))
    F[0, 0, 0] = -1.0
    for k, E in enumerate(basis, start=1):
        Eb = E @ b
        F[k, 0, 1:] = Eb
        F[k, 1:, 0] = Eb
        F[k, 1:, 1:] = A.T @ E + E @ A + delta * E
    return LmiConstraint(F, sign=-1, strict=True, name="stability")


def _positivity(n: int) -> LmiConstraint:
    basis = _sym_basis(n)
    F = np.concatenate([np.zeros((1, n, n)), basis])
    return LmiConstraint(F, sign=1, strict=True, name="P>0")


def _output_lmi(c: np.ndarray) -> LmiConstraint:
    """``[[gbar, c^T], [c, P]] > 0`` with decision vector ``(p, gbar)``."""
    n = c.shape[0]
    basis = _sym_basis(n)
    F = np.zeros((len(basis) + 2, n + 1, n + 1))
    F[0, 0, 1:] = c
    F[0, 1:, 0] = c
    F[1 : 1 + len(basis), 1:, 1:] = basis
    F[-1, 0, 0] = 1.0
    return LmiConstraint(F, sign=1, strict=True, name="output")


def _raise_for(sol: SdpSolution, what: str):
    if sol.status == SdpStatus.INFEASIBLE:
        raise InfeasibleError(f"{what}: infeasible ({sol.message})")
    raise NumericalFailure(f"{what}: {sol.message}")


def check_exponential_certificate(poly: PolytopeModel, delta: float) -> np.ndarray:
    """Find a common ``P > 0`` proving decay rate ``delta`` at every vertex.

    Raises
    ------
    InfeasibleError
        No such ``P`` exists (within the strictness margin).
    NumericalFailure
        The solver could not reach a validated answer.
    """
    n = poly.n
    cons = [assemble_stability_lmi(A, poly.b_in, delta) for A in poly.vertices]
    cons.append(_positivity(n))
    sol = solve(LmiProblem(sym_dim(n), tuple(cons)))
    if not sol.ok:
        _raise_for(sol, f"exponential certificate at delta={delta:g}")
    return sym_from_vec(sol.x, n)


def compute_p2p_gain(poly: PolytopeModel, delta: float) -> tuple[float, np.ndarray]:
    """Minimise ``gbar`` for fixed ``delta``; returns ``(gbar*, P)``.

    ``gamma = sqrt(gbar*/delta)`` bounds ``|y|_inf <= gamma |u|_inf`` from a
    zero initial state.
    """
    n = poly.n
    m = sym_dim(n) + 1
    cons = [assemble_stability_lmi(A, poly.b_in, delta).padded(m) for A in poly.vertices]
    cons.append(_positivity(n).padded(m))
    cons.append(_output_lmi(poly.c_out))
    obj = np.zeros(m)
    obj[-1] = 1.0
    sol = solve(LmiProblem(m, tuple(cons), obj))
    if not sol.ok:
        _raise_for(sol, f"p2p gain at delta={delta:g}")
    return float(sol.x[-1]), sym_from_vec(sol.x[:-1], n)


def default_delta_range(poly: PolytopeModel) -> tuple[float, float]:
    """``(1e-4, 2 min_l |max Re eig(A_l)|)``; beyond ``hi`` no vertex LMI holds."""
    worst = [float(np.max(np.linalg.eigvals(A).real)) for A in poly.vertices]
    if max(worst) >= 0.0:
        raise InfeasibleError(f"vertex not Hurwitz (max real eigenvalue parts {worst})")
    hi = 2.0 * min(abs(w) for w in worst)
    return min(DELTA_LO, 0.5 * hi), hi


def _certificate(poly, delta, gbar, P, solver=None) -> LyapunovCertificate:
    return LyapunovCertificate(P, float(delta), float(gbar), float(np.sqrt(gbar / delta)), poly, solver)


def bisect_delta(
    poly: PolytopeModel,
    delta_range: tuple[float, float] | None = None,
    tol: float = 1e-3,
    grid_points: int = GRID_POINTS,
) -> LyapunovCertificate:
    """Search ``delta`` minimising the peak-to-peak gain.

    A log-spaced scan locates the feasible interval and the best grid point;
    a bounded Brent search on ``log(delta)`` between the neighbouring grid
    points then refines it to relative tolerance ``tol``.  The global grid
    minimum is kept if the refinement does not improve on it.
    """
    lo, hi = default_delta_range(poly) if delta_range is None else map(float, delta_range)
    if not (0 < lo < hi):
        raise ValueError(f"invalid delta range ({lo}, {hi})")
    # the upper end is infeasible by construction for the default bracket
    deltas = np.geomspace(lo, hi * (1 - 1e-6), grid_points)
    cache: dict[float, tuple[float, np.ndarray] | None] = {}
    failures = 0

    def gamma_at(d: float) -> float:
        nonlocal failures
        if d not in cache:
            try:
                cache[d] = compute_p2p_gain(poly, d)
            except InfeasibleError:
                cache[d] = None
            except NumericalFailure:
                failures += 1
                cache[d] = None
        res = cache[d]
        return np.inf if res is None else float(np.sqrt(res[0] / d))

    gammas = np.array([gamma_at(float(d)) for d in deltas])
    if not np.any(np.isfinite(gammas)):
        if failures == len(deltas):
            raise NumericalFailure("every delta probe failed numerically")
        raise InfeasibleError(f"no feasible delta in [{lo:g}, {hi:g}]")
    i = int(np.argmin(gammas))
    left = np.log(deltas[max(i - 1, 0)])
    right = np.log(deltas[min(i + 1, len(deltas) - 1)])
    best_d = float(deltas[i])
    if right > left:
        res = minimize_scalar(
            lambda ld: gamma_at(float(np.exp(ld))),
            bounds=(left, right),
            method="bounded",
            options={"xatol": np.log1p(tol)},
        )
        d_ref = float(np.exp(res.x))
        if gamma_at(d_ref) < gamma_at(best_d):
            best_d = d_ref
    gbar, P = cache[best_d]
    log.debug("delta*=%g gamma=%g after %d probes", best_d, np.sqrt(gbar / best_d), len(cache))
    return _certificate(poly, best_d, gbar, P)


def ellipsoid_support(c, P, V: float) -> float:
    """``max{c^T x : x^T P x <= V} = sqrt(c^T P^{-1} c V)``."""
    if V < 0:
        raise ValueError("V must be non-negative")
    c = np.asarray(c, dtype=float)
    try:
        fac = cho_factor(np.asarray(P, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise ValueError("P is not positive definite") from exc
    return float(np.sqrt(c @ cho_solve(fac, c) * V))


def bound_output_trajectory(tb: TrajectoryBound, t: float) -> float:
    """Envelope ``sqrt(c^T P^-1 c (exp(-delta t) V(x0) + u_inf^2 / delta))``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    cert = tb.certificate
    c = cert.polytope.c_out if tb.c_query is None else tb.c_query
    V = np.exp(-cert.delta * t) * cert.V(tb.x0) + tb.u_inf**2 / cert.delta
    return ellipsoid_support(c, cert.P, V)


def compute_hinf_gain(poly: PolytopeModel) -> float:
    """Minimised bounded-real-lemma bound on the H-infinity norm over all vertices."""
    default_delta_range(poly)  # raises for non-Hurwitz vertices
    n = poly.n
    basis = _sym_basis(n)
    m = len(basis) + 1
    b, c = poly.b_in, poly.c_out
    cons = []
    for A in poly.vertices:
        F = np.zeros((m + 1, n + 2, n + 2))
        F[0, :n, n + 1] = c
        F[0, n + 1, :n] = c
        for k, E in enumerate(basis, start=1):
            F[k, :n, :n] = A.T @ E + E @ A
            F[k, :n, n] = E @ b
            F[k, n, :n] = E @ b
        F[m, n, n] = -1.0
        F[m, n + 1, n + 1] = -1.0
        cons.append(LmiConstraint(F, sign=-1, strict=True, name="bounded-real"))
    cons.append(_positivity(n).padded(m))
    obj = np.zeros(m)
    obj[-1] = 1.0
    sol = solve(LmiProblem(m, tuple(cons), obj))
    if not sol.ok:
        _raise_for(sol, "H-infinity gain")
    return float(sol.x[-1])
