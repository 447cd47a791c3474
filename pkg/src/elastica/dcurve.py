"""Discrete curves on a manifold and the fields that live along them.

A curve is a strictly increasing time grid t_0 = 0 < ... < t_n = 1 with one
manifold point per node.  Velocity, the square-root-velocity (SRV) transform
and the covariant derivative all use forward differences on the cells
[t_k, t_{k+1}), so cell quantities have length n and are based at the left
node.  Node fields keep length n+1; the value at t_n is the last cell value
transported forward, and never enters an integral.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BaseMismatch, DegenerateSpeed, WrongManifold
from .manifold import Manifold, Tangent, TOL_POINT, TOL_TAN

TOL_IMM = 1e-9


def _as_grid(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).copy()
    if t.ndim != 1 or t.size < 2:
        raise ValueError("time grid must be a 1-D vector with at least 2 nodes")
    if t[0] != 0.0 or t[-1] != 1.0:
        raise ValueError("time grid must start at exactly 0 and end at exactly 1")
    if np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return t


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    """An immersed curve sampled on a time grid: the discrete c."""

    manifold: Manifold
    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "times", _as_grid(self.times))
        pts = np.asarray(self.points, dtype=float).copy()
        if pts.ndim != 2 or pts.shape[0] != self.times.size:
            raise ValueError(
                f"points shape {pts.shape} does not match grid of {self.times.size} nodes"
            )
        self.manifold.check_point(pts)
        object.__setattr__(self, "points", pts)
        seg = self.manifold.dist(pts[:-1], pts[1:])
        bad = seg < TOL_IMM * self.dt
        if np.any(bad):
            k = int(np.argmax(bad))
            raise DegenerateSpeed(
                f"curve is not an immersion at cell {k}: "
                f"consecutive samples are {seg[k]:.3e} apart"
            )

    @property
    def n(self) -> int:
        """Number of cells."""
        return self.times.size - 1

    @property
    def dt(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def origin(self) -> np.ndarray:
        return self.points[0]

    def same_grid(self, other: "DiscreteCurve") -> bool:
        return (
            self.manifold == other.manifold
            and np.array_equal(self.times, other.times)
        )


@dataclass(frozen=True, eq=False)
class TangentField:
    """One tangent vector per curve node; vectors[k] lives at points[k]."""

    curve: DiscreteCurve
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float).copy()
        if v.shape != self.curve.points.shape:
            raise BaseMismatch(
                f"field shape {v.shape} does not align with curve of shape "
                f"{self.curve.points.shape}"
            )
        _check_tangency(self.curve.manifold, self.curve.points, v)
        object.__setattr__(self, "vectors", v)

    @classmethod
    def zero(cls, curve: DiscreteCurve) -> "TangentField":
        return cls(curve, np.zeros_like(curve.points))

    def __getitem__(self, k: int) -> Tangent:
        return Tangent(self.curve.points[k], self.vectors[k])


@dataclass(frozen=True, eq=False)
class CellField:
    """One tangent vector per curve cell, based at the cell's left node."""

    curve: DiscreteCurve
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float).copy()
        if v.shape != (self.curve.n, self.curve.points.shape[1]):
            raise BaseMismatch(
                f"cell field shape {v.shape} does not align with curve of "
                f"{self.curve.n} cells"
            )
        _check_tangency(self.curve.manifold, self.curve.points[:-1], v)
        object.__setattr__(self, "vectors", v)

    def __getitem__(self, k: int) -> Tangent:
        return Tangent(self.curve.points[k], self.vectors[k])


@dataclass(frozen=True, eq=False)
class SrvCurve:
    """Forward-difference square-root-velocity representation q_k = c_t / sqrt|c_t|."""

    curve: DiscreteCurve
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).copy()
        if q.shape != (self.curve.n, self.curve.points.shape[1]):
            raise BaseMismatch("q must hold one vector per cell")
        speed = np.linalg.norm(velocity_cells(self.curve), axis=-1)
        qn2 = np.sum(q * q, axis=-1)
        if np.max(np.abs(qn2 - speed)) > 1e-9 * max(1.0, float(np.max(speed))):
            raise DegenerateSpeed("|q_k|^2 does not equal the cell speed |c_t|")
        object.__setattr__(self, "q", q)


@dataclass(frozen=True, eq=False)
class Reparam:
    """Sampled increasing reparameterization with fixed endpoints."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid(self.values))

    @classmethod
    def identity(cls, times) -> "Reparam":
        return cls(np.asarray(times, dtype=float))


def _check_tangency(manifold: Manifold, base: np.ndarray, v: np.ndarray) -> None:
    tangential = manifold.project_tangent(base, v)
    drift = np.max(np.abs(v - tangential)) if v.size else 0.0
    if drift > max(TOL_TAN, 1e-12 * float(np.max(np.abs(v), initial=0.0))):
        raise BaseMismatch(
            f"vectors are not tangent to the manifold (radial drift {drift:.3e})"
        )


def velocity_cells(c: DiscreteCurve) -> np.ndarray:
    """c_t on the cells: log_{p_k}(p_{k+1}) / dt_k, shape (n, d)."""
    return c.manifold.log(c.points[:-1], c.points[1:]) / c.dt[:, None]


def velocity(c: DiscreteCurve) -> TangentField:
    """Forward-difference velocity as a node field.

    The final node duplicates the last cell value transported to p_n; all
    integrals use the cell values, so the duplicate never enters a number.
    """
    cells = velocity_cells(c)
    last = c.manifold.transport(c.points[-2], c.points[-1], cells[-1])
    return TangentField(c, np.vstack([cells, last]))


def srvf(c: DiscreteCurve) -> SrvCurve:
    """Square root velocity function q = c_t / sqrt(|c_t|) on the cells."""
    cells = velocity_cells(c)
    speed = np.linalg.norm(cells, axis=-1)
    if np.any(speed <= TOL_IMM):
        k = int(np.argmax(speed <= TOL_IMM))
        raise DegenerateSpeed(f"vanishing velocity at cell {k}: |c_t| = {speed[k]:.3e}")
    return SrvCurve(c, cells / np.sqrt(speed)[:, None])


def covariant_cells(c: DiscreteCurve, vectors: np.ndarray) -> np.ndarray:
    """Forward-difference covariant derivative of a node field, cell values."""
    m = c.manifold
    pulled = m.transport(c.points[1:], c.points[:-1], vectors[1:])
    return (pulled - vectors[:-1]) / c.dt[:, None]


def covariant_derivative(c: DiscreteCurve, w: TangentField) -> TangentField:
    """Discrete nabla_t of a field along c (transport-then-difference)."""
    if w.curve is not c and not (
        w.curve.same_grid(c) and np.array_equal(w.curve.points, c.points)
    ):
        raise BaseMismatch("field is not aligned with the curve")
    cells = covariant_cells(c, w.vectors)
    last = c.manifold.transport(c.points[-2], c.points[-1], cells[-1])
    return TangentField(c, np.vstack([cells, last]))


def transport_along(c: DiscreteCurve, k_from: int, k_to: int, u: Tangent) -> Tangent:
    """Chained per-segment parallel transport of u from node k_from to k_to."""
    if np.max(np.abs(u.base - c.points[k_from])) > TOL_POINT:
        raise BaseMismatch("tangent is not based at the requested curve node")
    m = c.manifold
    v = u.vec
    step = 1 if k_to >= k_from else -1
    for j in range(k_from, k_to, step):
        v = m.transport(c.points[j], c.points[j + step], v)
    return Tangent(c.points[k_to], v)


def _eval(c: DiscreteCurve, s: float) -> np.ndarray:
    """Point of the piecewise-geodesic interpolant of c at time s in [0, 1]."""
    t = c.times
    j = int(np.clip(np.searchsorted(t, s, side="right") - 1, 0, c.n - 1))
    if s == t[j]:
        return c.points[j]
    if s == t[j + 1]:
        return c.points[j + 1]
    alpha = (s - t[j]) / (t[j + 1] - t[j])
    m = c.manifold
    return m.exp(c.points[j], alpha * m.log(c.points[j], c.points[j + 1]))


def resample(c: DiscreteCurve, new_times) -> DiscreteCurve:
    """Same curve traced on a new grid, by geodesic interpolation of samples."""
    grid = _as_grid(new_times)
    pts = np.array([_eval(c, s) for s in grid])
    return DiscreteCurve(c.manifold, grid, pts)


def reparameterize(c: DiscreteCurve, phi: Reparam) -> DiscreteCurve:
    """The reparameterized curve c(phi(t_k)) on the original grid."""
    if phi.values.size != c.times.size:
        raise ValueError("reparameterization is sampled on a different grid")
    pts = np.array([_eval(c, s) for s in phi.values])
    return DiscreteCurve(c.manifold, c.times, pts)


def require_common_grid(a: DiscreteCurve, b: DiscreteCurve) -> None:
    if a.manifold != b.manifold:
        raise WrongManifold("curves live on different manifolds")
    if not np.array_equal(a.times, b.times):
        raise WrongManifold("curves are sampled on different time grids")


def merge_to_common_grid(a: DiscreteCurve, b: DiscreteCurve):
    """Resample both curves onto the union of their grids if they differ."""
    if a.manifold != b.manifold:
        raise WrongManifold("curves live on different manifolds")
    if np.array_equal(a.times, b.times):
        return a, b
    merged = np.union1d(a.times, b.times)
    return resample(a, merged), resample(b, merged)
