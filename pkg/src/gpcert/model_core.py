"""Plant class, controlled error dynamics and the polytopic bounding model.

The controlled first-order plant

    y' = a(y, t) + b(y, t) u + e(y, t) z

is driven into the quasi-linear error system ``x' = A(x, t) x + b v`` with
``x = [e_y, e_z]`` and ``v`` the prediction-error rate.  The state matrix
depends on the scalar gain ``e``, so bounding ``e`` by an interval yields a
two-vertex polytope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

ScalarFn = Callable[[float, float], float]


@dataclass(frozen=True)
class PlantModel:
    """Input-affine first-order plant ``y' = a + b u + e z``.

    ``a``, ``b`` and ``e`` are functions of ``(y, t)``.  ``z_f`` maps the
    measurable disturbance inputs to the hidden function value and
    ``zeta_of_t`` yields those inputs over time.
    """

    a: ScalarFn
    b: ScalarFn
    e: ScalarFn
    z_f: Callable | None = None
    zeta_of_t: Callable[[float], np.ndarray] | None = None
    z_bounds: tuple[tuple[float, float], ...] | None = None
    name: str = "plant"

    def rhs(self, y: float, u: float, z: float, t: float) -> float:
        return self.a(y, t) + self.b(y, t) * u + self.e(y, t) * z

    def hidden(self, zeta) -> float:
        if self.z_f is None:
            raise ValueError(f"plant {self.name!r} has no hidden function")
        zeta = np.atleast_1d(np.asarray(zeta, dtype=float))
        if self.z_bounds is not None:
            for v, (lo, hi) in zip(zeta, self.z_bounds):
                if not lo <= v <= hi:
                    raise ValueError(f"zeta={zeta} outside declared box {self.z_bounds}")
        return float(self.z_f(zeta[0]) if zeta.size == 1 else self.z_f(zeta))


class ErrorState(NamedTuple):
    """Tracking error ``e_y = y_r - y`` and combined estimation error ``e_z``."""

    e_y: float
    e_z: float


@dataclass(frozen=True)
class GainBand:
    """Interval ``[e_minus, e_plus]`` enclosing the disturbance input gain."""

    e_minus: float
    e_plus: float

    def __post_init__(self):
        if not (np.isfinite(self.e_minus) and np.isfinite(self.e_plus)):
            raise ValueError("gain band must be finite")
        if self.e_minus > self.e_plus:
            raise ValueError(f"e_minus={self.e_minus} > e_plus={self.e_plus}")

    @property
    def contains_zero(self) -> bool:
        # a zero gain decouples e_z from e_y; that vertex cannot be stabilised
        return self.e_minus <= 0.0 <= self.e_plus

    @property
    def degenerate(self) -> bool:
        return self.e_minus == self.e_plus


@dataclass(frozen=True)
class PolytopeModel:
    """Vertices ``A_l`` sharing input vector ``b_in`` and output vector ``c_out``."""

    vertices: tuple[np.ndarray, ...]
    b_in: np.ndarray
    c_out: np.ndarray
    flags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        verts = tuple(np.array(v, dtype=float) for v in self.vertices)
        if len(verts) == 0:
            raise ValueError("polytope needs at least one vertex")
        n = verts[0].shape[0]
        for v in verts:
            if v.shape != (n, n):
                raise ValueError(f"vertex shape {v.shape} != {(n, n)}")
        b = np.array(self.b_in, dtype=float).reshape(-1)
        c = np.array(self.c_out, dtype=float).reshape(-1)
        if b.shape != (n,) or c.shape != (n,):
            raise ValueError("b_in and c_out must have length n")
        for arr in (*verts, b, c):
            arr.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "b_in", b)
        object.__setattr__(self, "c_out", c)
        object.__setattr__(self, "flags", tuple(self.flags))

    @property
    def n(self) -> int:
        return self.vertices[0].shape[0]

    @property
    def L(self) -> int:
        return len(self.vertices)

    def with_output(self, c_out) -> "PolytopeModel":
        return PolytopeModel(self.vertices, self.b_in, c_out, self.flags)

    def to_dict(self) -> dict:
        return {
            "vertices": [v.tolist() for v in self.vertices],
            "b_in": self.b_in.tolist(),
            "c_out": self.c_out.tolist(),
            "flags": list(self.flags),
        }


def error_vertex(K_P: float, K_I: float, e: float) -> np.ndarray:
    return np.array([[-K_P, e], [-K_I * e, 0.0]])


def build_error_polytope(K_P: float, K_I: float, band: GainBand) -> PolytopeModel:
    """Two-vertex polytope of the controlled error system.

    Vertex order is ``(e_plus, e_minus)``.  Input ``b = [0, 1]`` injects the
    prediction-error rate into ``e_z'``; output ``c = [1, 0]`` reads ``e_y``.
    """
    if not (K_P > 0 and K_I > 0):
        raise ValueError(f"gains must be positive, got K_P={K_P}, K_I={K_I}")
    flags = ("gain band contains zero",) if band.contains_zero else ()
    return PolytopeModel(
        vertices=(error_vertex(K_P, K_I, band.e_plus), error_vertex(K_P, K_I, band.e_minus)),
        b_in=np.array([0.0, 1.0]),
        c_out=np.array([1.0, 0.0]),
        flags=flags,
    )


def check_error_polytope_consistency(poly: PolytopeModel) -> list[str]:
    """Report vertices that cannot stem from a single ``(K_P, K_I)`` pair.

    Only meaningful for 2x2 vertices in the error-system layout.  Returns a
    list of human-readable warnings (empty when consistent).
    """
    if poly.n != 2:
        return []
    warnings = []
    kp = [float(-v[0, 0]) for v in poly.vertices]
    if not np.allclose(kp, kp[0], rtol=1e-9, atol=0.0):
        warnings.append(
            f"vertex (1,1) entries differ ({[-k for k in kp]}); the error dynamics "
            "imply a single shared proportional gain"
        )
    ki = []
    for v in poly.vertices:
        if v[0, 1] != 0.0:
            ki.append(float(-v[1, 0] / v[0, 1]))
    if ki and not np.allclose(ki, ki[0], rtol=1e-3):
        warnings.append(f"implied integral gains differ across vertices: {ki}")
    if any(v[1, 1] != 0.0 for v in poly.vertices):
        warnings.append("vertex (2,2) entry is non-zero")
    return warnings


def error_dynamics_rhs(state: ErrorState, e_bar: float, v: float, K_P: float, K_I: float) -> ErrorState:
    """Time derivative of ``(e_y, e_z)`` for gain ``e_bar`` and input ``v``."""
    e_y, e_z = state
    return ErrorState(-K_P * e_y + e_bar * e_z, -K_I * e_bar * e_y + v)


def convex_member(poly: PolytopeModel, weights: Sequence[float]) -> np.ndarray:
    """Return ``sum_l weights[l] * A_l`` for weights on the unit simplex."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (poly.L,):
        raise ValueError(f"expected {poly.L} weights, got shape {w.shape}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must be non-negative and sum to 1, got {w}")
    return np.tensordot(w, np.stack(poly.vertices), axes=1)


def gain_band_from_grid(
    e_gain: ScalarFn,
    y_range: tuple[float, float],
    t: float = 0.0,
    n_grid: int = 1000,
) -> GainBand:
    """Extremize ``e(y, t)`` over a uniform grid of ``y_range`` plus endpoints."""
    lo, hi = map(float, y_range)
    if lo > hi:
        raise ValueError("empty range")
    ys = np.unique(np.concatenate([np.linspace(lo, hi, n_grid), [lo, hi]]))
    vals = np.array([float(e_gain(float(y), t)) for y in ys])
    if not np.all(np.isfinite(vals)):
        raise ValueError("gain evaluated to a non-finite value on the grid")
    return GainBand(float(vals.min()), float(vals.max()))
