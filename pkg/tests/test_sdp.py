import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gpcert.sdp import LmiConstraint, LmiProblem, SdpStatus, min_eigenvalue, solve, validate


def scalar(c0, c1, sign=1):
    return LmiConstraint(np.array([[[c0]], [[c1]]]), sign=sign)


def test_min_eigenvalue_examples():
    assert min_eigenvalue(np.eye(3)) == 1.0
    assert min_eigenvalue(np.diag([-2.0, 5.0])) == -2.0


@given(arrays(np.float64, (4, 4), elements=st.floats(-10, 10)))
def test_min_eigenvalue_matches_characteristic_roots(M):
    S = 0.5 * (M + M.T)
    roots = np.roots(np.poly(S)).real
    assert min_eigenvalue(S) == pytest.approx(roots.min(), abs=1e-6 * max(1.0, np.abs(S).max()))


def test_min_eigenvalue_rejects_asymmetric():
    with pytest.raises(ValueError):
        min_eigenvalue(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_constraint_must_be_symmetric():
    with pytest.raises(ValueError):
        LmiConstraint(np.array([[[0.0, 1.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]]))


def test_stable_scalar_lyapunov_is_feasible():
    # p > 0 and (-2 + 0.5) p < 0
    prob = LmiProblem(1, (scalar(0.0, 1.0), scalar(0.0, -1.5, sign=-1)))
    sol = solve(prob)
    assert sol.ok and sol.x[0] > 0
    assert all(e > 0 for e in sol.min_eigs)


@pytest.mark.parametrize("delta", [0.1, 1.0, 5.0])
def test_unstable_scalar_is_infeasible(delta):
    prob = LmiProblem(1, (scalar(0.0, 1.0), scalar(0.0, 2.0 + delta, sign=-1)))
    sol = solve(prob)
    assert sol.status == SdpStatus.INFEASIBLE
    assert sol.x is None


def _schur_problem():
    # [[gbar, 1], [1, 2]] > 0 in the single variable gbar
    F = np.zeros((2, 2, 2))
    F[0] = [[0.0, 1.0], [1.0, 2.0]]
    F[1] = [[1.0, 0.0], [0.0, 0.0]]
    return LmiProblem(1, (LmiConstraint(F),), objective=np.array([1.0]))


def test_minimised_schur_complement_bound():
    sol = solve(_schur_problem())
    assert sol.status == SdpStatus.OPTIMAL
    # oracle: 1-D scan for the smallest gbar with a positive definite block
    grid = np.linspace(0.4, 0.6, 20001)
    feas = [g for g in grid if np.linalg.eigvalsh([[g, 1.0], [1.0, 2.0]])[0] > 0]
    assert sol.value == pytest.approx(feas[0], abs=1e-4)
    assert sol.value > 0.5


def test_solution_is_deterministic():
    a, b = solve(_schur_problem()), solve(_schur_problem())
    np.testing.assert_allclose(a.x, b.x, rtol=0, atol=1e-9)


def test_validate_recomputes_eigenvalues():
    prob = _schur_problem()
    ok, eigs = validate(prob, np.array([0.4]))
    assert not ok and eigs[0] < 0
    ok, eigs = validate(prob, np.array([1.0]))
    assert ok and eigs[0] > 0


def test_problem_dimension_checked():
    with pytest.raises(ValueError):
        LmiProblem(2, (scalar(0.0, 1.0),))
