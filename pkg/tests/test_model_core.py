import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gpcert.model_core import (
    ErrorState,
    GainBand,
    PlantModel,
    PolytopeModel,
    build_error_polytope,
    check_error_polytope_consistency,
    convex_member,
    error_dynamics_rhs,
    gain_band_from_grid,
)

finite = st.floats(-50, 50, allow_nan=False)
pos = st.floats(0.1, 50)


def test_vertices_of_benchmark_polytope(poly_bench):
    A1, A2 = poly_bench.vertices
    np.testing.assert_array_equal(A1, [[-10, 10], [-200, 0]])
    np.testing.assert_array_equal(A2, [[-10, 1], [-20, 0]])
    np.testing.assert_array_equal(poly_bench.b_in, [0, 1])
    np.testing.assert_array_equal(poly_bench.c_out, [1, 0])


def test_degenerate_band_duplicates_vertex():
    poly = build_error_polytope(1.0, 1.0, GainBand(1.0, 1.0))
    assert poly.L == 2
    for A in poly.vertices:
        np.testing.assert_array_equal(A, [[-1, 1], [-1, 0]])


def test_pneumatic_band_off_diagonals():
    poly = build_error_polytope(4.0, 1000.0, GainBand(-0.1152, -0.0665))
    (A1, A2) = poly.vertices
    assert A1[0, 1] == pytest.approx(-0.0665) and A1[1, 0] == pytest.approx(66.5)
    assert A2[0, 1] == pytest.approx(-0.1152) and A2[1, 0] == pytest.approx(115.2)


def test_band_containing_zero_is_flagged():
    poly = build_error_polytope(1.0, 1.0, GainBand(-1.0, 1.0))
    assert poly.flags


def test_invalid_inputs_rejected():
    with pytest.raises(ValueError):
        GainBand(2.0, 1.0)
    with pytest.raises(ValueError):
        build_error_polytope(-1.0, 1.0, GainBand(1.0, 2.0))
    with pytest.raises(ValueError):
        PolytopeModel((np.eye(2), np.eye(3)), [0, 1], [1, 0])


def test_verbatim_experimental_polytope_is_flagged(poly_pneumatic_printed, poly_bench):
    warnings = check_error_polytope_consistency(poly_pneumatic_printed)
    assert any("(1,1)" in w for w in warnings)
    assert check_error_polytope_consistency(poly_bench) == []


def test_error_dynamics_examples():
    assert error_dynamics_rhs(ErrorState(0.0, 0.0), 3.7, 0.0, 10, 20) == (0.0, 0.0)
    assert error_dynamics_rhs(ErrorState(1.0, 0.0), 2.0, 0.0, 10, 20) == (-10.0, -40.0)


@given(finite, finite, finite, finite, pos, pos)
def test_error_dynamics_is_linear_system(ey, ez, e, v, kp, ki):
    from gpcert.model_core import error_vertex

    got = np.array(error_dynamics_rhs(ErrorState(ey, ez), e, v, kp, ki))
    want = error_vertex(kp, ki, e) @ [ey, ez] + np.array([0.0, 1.0]) * v
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-9)


def test_convex_member_examples(poly_bench):
    np.testing.assert_array_equal(convex_member(poly_bench, [1, 0]), poly_bench.vertices[0])
    np.testing.assert_array_equal(convex_member(poly_bench, [0, 1]), poly_bench.vertices[1])
    np.testing.assert_allclose(convex_member(poly_bench, [0.5, 0.5]), [[-10, 5.5], [-110, 0]])


def test_convex_member_blend_entrywise(poly_bench):
    got = convex_member(poly_bench, [0.3, 0.7])
    A1, A2 = poly_bench.vertices
    for i in range(2):
        for j in range(2):
            assert got[i, j] == pytest.approx(0.3 * A1[i, j] + 0.7 * A2[i, j])


@pytest.mark.parametrize("w", [[0.5, 0.6], [-0.1, 1.1], [1.0]])
def test_convex_member_rejects_bad_weights(poly_bench, w):
    with pytest.raises(ValueError):
        convex_member(poly_bench, w)


def test_gain_band_from_grid():
    band = gain_band_from_grid(lambda y, t: y, (1.0, 10.0))
    assert (band.e_minus, band.e_plus) == (1.0, 10.0)
    flat = gain_band_from_grid(lambda y, t: 2.5, (0.0, 3.0))
    assert flat.degenerate


@given(st.floats(-3, 3), st.floats(0.01, 3))
def test_gain_band_encloses_samples(lo, width):
    f = lambda y, t: np.sin(3 * y) + 0.1 * y**2  # noqa: E731
    band = gain_band_from_grid(f, (lo, lo + width), n_grid=400)
    ys = np.linspace(lo, lo + width, 97)
    vals = f(ys, 0.0)
    assert band.e_minus <= vals.min() + 1e-4 and vals.max() <= band.e_plus + 1e-4


def test_plant_model_rhs_and_hidden():
    p = PlantModel(lambda y, t: -y, lambda y, t: 2.0, lambda y, t: y, z_f=lambda z: z * z, z_bounds=((0, 1),))
    assert p.rhs(1.0, 0.5, 3.0, 0.0) == pytest.approx(-1 + 1 + 3)
    assert p.hidden(0.5) == 0.25
    with pytest.raises(ValueError):
        p.hidden(2.0)
