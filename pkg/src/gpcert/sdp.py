"""Small dense semidefinite programs in canonical affine form.

Each constraint is an affine matrix map ``F(x) = F_0 + sum_i x_i F_i`` that
must be positive (``sign=+1``) or negative (``sign=-1``) definite.  Problems
are handed to a conic solver through cvxpy; every returned point is checked
again with an independent eigenvalue computation before it is reported as
feasible.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import cvxpy as cp
import numpy as np

MAX_BLOCK = 16
STRICT_REL = 1e-8
# solve with a padded margin so the a-posteriori check has headroom
SOLVE_PAD = 10.0
COND_LIMIT = 1e12
DEFAULT_SOLVERS = ("CLARABEL", "CVXOPT", "SCS")


class SdpStatus(str, Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class LmiConstraint:
    """``sign * (F[0] + sum_i x_i F[i+1])`` must be positive (semi)definite."""

    F: np.ndarray
    sign: int = 1
    strict: bool = True
    name: str = ""

    def __post_init__(self):
        F = np.array(self.F, dtype=float)
        if F.ndim != 3 or F.shape[1] != F.shape[2]:
            raise ValueError(f"F must have shape (m+1, s, s), got {F.shape}")
        if F.shape[1] > MAX_BLOCK:
            raise ValueError(f"block size {F.shape[1]} exceeds {MAX_BLOCK}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        scale = max(1.0, float(np.abs(F).max()))
        asym = float(np.abs(F - F.transpose(0, 2, 1)).max())
        if asym > 1e-12 * scale:
            raise ValueError(f"constraint {self.name!r} is not symmetric (|F - F^T| = {asym:.3g})")
        F = 0.5 * (F + F.transpose(0, 2, 1))
        F.setflags(write=False)
        object.__setattr__(self, "F", F)

    @property
    def size(self) -> int:
        return self.F.shape[1]

    @property
    def n_vars(self) -> int:
        return self.F.shape[0] - 1

    @property
    def margin(self) -> float:
        if not self.strict:
            return 0.0
        return STRICT_REL * (1.0 + float(np.linalg.norm(self.F[0], 2)))

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return self.F[0] + np.tensordot(np.asarray(x, dtype=float), self.F[1:], axes=1)

    def padded(self, m: int, offset: int = 0) -> "LmiConstraint":
        """Embed into a larger decision vector of length ``m`` at ``offset``."""
        F = np.zeros((m + 1, self.size, self.size))
        F[0] = self.F[0]
        F[1 + offset : 1 + offset + self.n_vars] = self.F[1:]
        return LmiConstraint(F, self.sign, self.strict, self.name)


@dataclass(frozen=True)
class LmiProblem:
    decision_dim: int
    constraints: tuple[LmiConstraint, ...]
    objective: np.ndarray | None = None

    def __post_init__(self):
        cons = tuple(self.constraints)
        if not cons:
            raise ValueError("problem has no constraints")
        for c in cons:
            if c.n_vars != self.decision_dim:
                raise ValueError(
                    f"constraint {c.name!r} has {c.n_vars} variables, expected {self.decision_dim}"
                )
        object.__setattr__(self, "constraints", cons)
        if self.objective is not None:
            obj = np.asarray(self.objective, dtype=float).reshape(-1)
            if obj.shape != (self.decision_dim,):
                raise ValueError("objective length must equal decision_dim")
            object.__setattr__(self, "objective", obj)


@dataclass(frozen=True)
class SdpSolution:
    x: np.ndarray | None
    status: SdpStatus
    min_eigs: tuple[float, ...] = ()
    value: float | None = None
    solver: str | None = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status in (SdpStatus.OPTIMAL, SdpStatus.FEASIBLE)


def min_eigenvalue(M: np.ndarray, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.abs(M).max()))
    if float(np.abs(M - M.T).max()) > tol * scale:
        raise ValueError("matrix is not symmetric")
    return float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])


def validate(problem: LmiProblem, x: np.ndarray) -> tuple[bool, tuple[float, ...]]:
    """Recompute every constraint's signed minimum eigenvalue at ``x``."""
    eigs = []
    ok = bool(np.all(np.isfinite(x)))
    for c in problem.constraints:
        lam = min_eigenvalue(c.sign * c.evaluate(x))
        eigs.append(lam)
        floor = c.margin if c.strict else -1e-9 * (1.0 + float(np.linalg.norm(c.F[0], 2)))
        if not lam >= floor:
            ok = False
    return ok, tuple(eigs)


def _data_condition(problem: LmiProblem) -> float:
    # columns: vectorised F_i of every constraint, stacked
    cols = np.concatenate([c.F[1:].reshape(problem.decision_dim, -1) for c in problem.constraints], axis=1)
    s = np.linalg.svd(cols, compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def _affine_expr(c: LmiConstraint, x: cp.Variable):
    s = c.size
    Fmat = c.F[1:].reshape(c.n_vars, s * s)
    flat = c.F[0].reshape(-1) + Fmat.T @ x
    M = cp.reshape(flat, (s, s), order="C")
    return c.sign * (M + M.T) / 2


def _build(problem: LmiProblem):
    x = cp.Variable(problem.decision_dim)
    cons = []
    if problem.objective is None:
        t = cp.Variable()
        for c in problem.constraints:
            expr = _affine_expr(c, x)
            if c.strict:
                cons.append(expr >> t * np.eye(c.size))
            else:
                cons.append(expr >> 0)
        cons.append(t <= 1.0)
        prob = cp.Problem(cp.Maximize(t), cons)
        return prob, x, t
    for c in problem.constraints:
        expr = _affine_expr(c, x)
        cons.append(expr >> SOLVE_PAD * c.margin * np.eye(c.size))
    prob = cp.Problem(cp.Minimize(problem.objective @ x), cons)
    return prob, x, None


def solve(problem: LmiProblem, solvers: Sequence[str] = DEFAULT_SOLVERS) -> SdpSolution:
    """Solve ``problem`` and validate the result a posteriori.

    Without an objective the largest uniform margin ``t <= 1`` is maximised,
    which yields a well-centred strictly feasible point.  Solvers are tried in
    order; ``Infeasible`` is returned only if none produced a validated point
    and at least one reported infeasibility (or a margin below threshold).
    Two agreeing infeasibility verdicts end the search early.
    """
    cond = _data_condition(problem)
    if cond > COND_LIMIT:
        return SdpSolution(None, SdpStatus.NUMERICAL_FAILURE, message=f"data condition {cond:.3g}")
    available = set(cp.installed_solvers())
    saw_infeasible = 0
    messages = []
    for name in solvers:
        if name not in available:
            continue
        prob, x, t = _build(problem)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                prob.solve(solver=name)
        except cp.error.SolverError as exc:
            messages.append(f"{name}: {exc}")
            continue
        status = prob.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            saw_infeasible += 1
            messages.append(f"{name}: {status}")
            if saw_infeasible >= 2:
                break
            continue
        if x.value is None:
            messages.append(f"{name}: {status}")
            continue
        xv = np.array(x.value, dtype=float)
        ok, eigs = validate(problem, xv)
        if ok:
            if problem.objective is None:
                return SdpSolution(xv, SdpStatus.FEASIBLE, eigs, None, name)
            return SdpSolution(xv, SdpStatus.OPTIMAL, eigs, float(problem.objective @ xv), name)
        if t is not None and t.value is not None:
            need = max(c.margin for c in problem.constraints if c.strict) if any(
                c.strict for c in problem.constraints
            ) else 0.0
            if float(t.value) < need:
                saw_infeasible += 1
        messages.append(f"{name}: {status}, validation failed (min eigs {eigs})")
        if saw_infeasible >= 2:
            break
    status = SdpStatus.INFEASIBLE if saw_infeasible else SdpStatus.NUMERICAL_FAILURE
    return SdpSolution(None, status, message="; ".join(messages))
