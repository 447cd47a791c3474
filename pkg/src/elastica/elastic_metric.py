"""The elastic metric machinery: pullback metric G, bundle metric on TM,
SRV differential, path energies/lengths, the raised SRV surface and the
curvature correction term.

A path of curves is a grid c(s_i, t_k) of manifold points.  All t-integrals
are left-endpoint Riemann sums over the cells, matching the forward
differences used everywhere else, and all s-derivatives entering lengths are
covariant difference quotients between consecutive slices, so that in flat
space every transported expression collapses to exact vector arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dcurve import (
    DiscreteCurve,
    TangentField,
    CellField,
    _as_grid,
    covariant_cells,
    srvf,
    velocity_cells,
)
from .errors import BaseMismatch, DegenerateSpeed
from .manifold import Tangent, TOL_POINT, inner as tangent_inner

TOL_IMM = 1e-9


@dataclass(frozen=True, eq=False)
class CurvePath:
    """A discrete path of curves: slices c(s_i, .) over a shared t-grid.

    Engine-produced paths carry the per-slice velocity fields c_s(s_i, .) in
    ``cs``; for raw paths these are recovered by per-node log maps between
    consecutive slices.
    """

    s_grid: np.ndarray
    slices: tuple
    cs: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "s_grid", _as_grid(self.s_grid))
        slices = tuple(self.slices)
        if len(slices) != self.s_grid.size:
            raise ValueError("number of slices does not match the s grid")
        first = slices[0]
        for c in slices[1:]:
            if not c.same_grid(first):
                raise ValueError("all slices must share one manifold and t-grid")
        object.__setattr__(self, "slices", slices)
        if self.cs is not None:
            cs = tuple(np.asarray(v, dtype=float) for v in self.cs)
            if len(cs) != len(slices) or any(
                v.shape != c.points.shape for v, c in zip(cs, slices)
            ):
                raise ValueError("stored velocity fields do not align with slices")
            object.__setattr__(self, "cs", cs)

    @property
    def S(self) -> int:
        return self.s_grid.size - 1

    @property
    def ds(self) -> np.ndarray:
        return np.diff(self.s_grid)

    @property
    def manifold(self):
        return self.slices[0].manifold

    @property
    def times(self) -> np.ndarray:
        return self.slices[0].times

    @property
    def origins(self) -> np.ndarray:
        return np.array([c.points[0] for c in self.slices])

    @property
    def base_point(self) -> np.ndarray:
        """c(0, 0): the tangent space every raised quantity lives in."""
        return self.slices[0].points[0]


@dataclass(frozen=True, eq=False)
class BundleVector:
    """A tangent vector to TM in projected form: foot-point motion at the
    origin plus the covariant fiber motion along the whole curve."""

    origin_h: Tangent
    vertical: TangentField

    def __post_init__(self):
        if np.max(np.abs(self.origin_h.base - self.vertical.curve.origin)) > TOL_POINT:
            raise BaseMismatch("origin_h is not based at the curve origin")

    @property
    def curve(self) -> DiscreteCurve:
        return self.vertical.curve


def _srv_rate(ct: np.ndarray, d_field: np.ndarray) -> np.ndarray:
    """Rate of change of q = c_t/sqrt|c_t| given the rate d_field of c_t.

    This is d/sqrt|c_t| - (1/2) <d, c_t> c_t / |c_t|^{5/2}; equivalently
    sqrt|c_t| ((d/|c_t|)^perp + (1/2) <d/|c_t|, v> v) against the unit
    tangent v.
    """
    speed = np.linalg.norm(ct, axis=-1)
    if np.any(speed <= TOL_IMM):
        k = int(np.argmax(speed <= TOL_IMM))
        raise DegenerateSpeed(f"vanishing cell speed at cell {k}")
    dot = np.einsum("...i,...i->...", d_field, ct)
    return (
        d_field / np.sqrt(speed)[..., None]
        - 0.5 * (dot / speed**2.5)[..., None] * ct
    )


def srv_differential(c: DiscreteCurve, h: TangentField) -> CellField:
    """Vertical projection of the SRV map's differential applied to h."""
    _require_aligned(c, h)
    return CellField(c, _srv_rate(velocity_cells(c), covariant_cells(c, h.vectors)))


def srv_lift(c: DiscreteCurve, h: TangentField) -> BundleVector:
    """Lift of h through the SRV map: origin motion plus srv_differential."""
    cells = srv_differential(c, h).vectors
    last = c.manifold.transport(c.points[-2], c.points[-1], cells[-1])
    return BundleVector(
        Tangent(c.origin, h.vectors[0]),
        TangentField(c, np.vstack([cells, last])),
    )


def metric_G(c: DiscreteCurve, h: TangentField, k: TangentField) -> float:
    """The pullback elastic metric: origin term plus the first-order Sobolev
    integral with the 1/4-weighted tangential part, over arc length."""
    _require_aligned(c, h)
    _require_aligned(c, k)
    ct = velocity_cells(c)
    speed = np.linalg.norm(ct, axis=-1)
    if np.any(speed <= TOL_IMM):
        raise DegenerateSpeed("curve has a vanishing-speed cell")
    v = ct / speed[:, None]
    dh = covariant_cells(c, h.vectors) / speed[:, None]
    dk = covariant_cells(c, k.vectors) / speed[:, None]
    ah = np.einsum("ij,ij->i", dh, v)
    ak = np.einsum("ij,ij->i", dk, v)
    perp = np.einsum("ij,ij->i", dh - ah[:, None] * v, dk - ak[:, None] * v)
    origin = float(np.dot(h.vectors[0], k.vectors[0]))
    return origin + float(np.sum(c.dt * speed * (perp + 0.25 * ah * ak)))


def tilde_G(xi: BundleVector, eta: BundleVector) -> float:
    """Sasaki-style bundle metric: origin projections plus the L^2 pairing of
    the vertical projections."""
    if xi.curve is not eta.curve and not np.array_equal(
        xi.curve.points, eta.curve.points
    ):
        raise BaseMismatch("bundle vectors are based over different curves")
    c = xi.curve
    origin = tangent_inner(xi.origin_h, eta.origin_h)
    pair = np.einsum(
        "ij,ij->i", xi.vertical.vectors[:-1], eta.vertical.vectors[:-1]
    )
    return origin + float(np.sum(c.dt * pair))


def path_velocity(path: CurvePath, i: int) -> np.ndarray:
    """c_s at slice i: the stored field if present, else per-node log maps
    to the next slice divided by ds (last slice: previous value carried)."""
    if path.cs is not None:
        return path.cs[i]
    m = path.manifold
    if i < path.S:
        a, b = path.slices[i].points, path.slices[i + 1].points
        return m.log(a, b) / path.ds[i]
    a, b = path.slices[i - 1].points, path.slices[i].points
    return m.transport(a, b, path_velocity(path, i - 1))


def nabla_s_q(path: CurvePath, i: int) -> CellField:
    """Covariant s-derivative of the SRV field at slice i, from c_s through
    the chain rule for q = c_t/sqrt|c_t| (using nabla_s c_t = nabla_t c_s)."""
    c = path.slices[i]
    d_field = covariant_cells(c, path_velocity(path, i))
    return CellField(c, _srv_rate(velocity_cells(c), d_field))


def _slice_srvs(path: CurvePath) -> list:
    return [srvf(c).q for c in path.slices]


def _q_s_differences(path: CurvePath, qs: list) -> list:
    """Covariant difference quotients of q between consecutive slices,
    one (n, d) array per s-cell, based on the left slice."""
    m = path.manifold
    out = []
    for i in range(path.S):
        a = path.slices[i].points[:-1]
        b = path.slices[i + 1].points[:-1]
        pulled = m.transport(b, a, qs[i + 1])
        out.append((pulled - qs[i]) / path.ds[i])
    return out


def _origin_rates(path: CurvePath) -> np.ndarray:
    m = path.manifold
    o = path.origins
    return m.log(o[:-1], o[1:]) / path.ds[:, None]


def _cell_energies(path: CurvePath) -> np.ndarray:
    """Energy integrand per s-cell: |c_s(s,0)|^2 + int |nabla_s q|^2 dt."""
    qs = _slice_srvs(path)
    dq = _q_s_differences(path, qs)
    orates = _origin_rates(path)
    dt = np.diff(path.times)
    vals = np.empty(path.S)
    for i in range(path.S):
        vals[i] = np.dot(orates[i], orates[i]) + float(
            np.sum(dt * np.einsum("ij,ij->i", dq[i], dq[i]))
        )
    return vals


def path_energy(path: CurvePath) -> float:
    """Discrete energy of the path under the elastic metric."""
    return float(np.sum(path.ds * _cell_energies(path)))


def path_length(path: CurvePath) -> float:
    """Discrete length of the path; length^2 <= energy (Cauchy-Schwarz)."""
    return float(np.sum(path.ds * np.sqrt(_cell_energies(path))))


def _raise_along_slice(c: DiscreteCurve, cells: np.ndarray) -> np.ndarray:
    """Transport per-cell vectors from their own node down to node 0."""
    m = c.manifold
    out = cells.copy()
    for l in range(cells.shape[0] - 1, 0, -1):
        out[l:] = m.transport(c.points[l], c.points[l - 1], out[l:])
    return out


def _raise_along_origins(path: CurvePath, rows: np.ndarray) -> np.ndarray:
    """Transport per-slice rows (row i based at origin i) down to origin 0."""
    m = path.manifold
    o = path.origins
    out = rows.copy()
    for i in range(rows.shape[0] - 1, 0, -1):
        out[i:] = m.transport(o[i], o[i - 1], out[i:])
    return out


def raise_q(path: CurvePath) -> np.ndarray:
    """The raised SRV surface: every q(s_i, t_k) parallel transported to
    T_{c(0,0)}M, first along its own slice, then along the origin curve.
    Returns an (S+1, n, d) array of free vectors at the base point."""
    qs = _slice_srvs(path)
    rows = np.array(
        [_raise_along_slice(c, q) for c, q in zip(path.slices, qs)]
    )
    return _raise_along_origins(path, rows)


def _slice_omega_nodes(path: CurvePath, i: int, q: np.ndarray) -> np.ndarray:
    """Curvature integral at slice i: for every cell k, the transported
    left-Riemann sum over tau-cells below k of R(c_t, c_s) applied to q_k
    carried down and back.  Result row k is based at node k."""
    c = path.slices[i]
    m = c.manifold
    P = c.points
    n = c.n
    dt = c.dt
    ct = velocity_cells(c)
    cs_cells = path_velocity(path, i)[:-1]
    # triangle T[k, l] = q_k transported from node k to node l (l <= k)
    T = np.zeros((n, n, P.shape[1]))
    T[np.arange(n), np.arange(n)] = q
    for l in range(n - 1, 0, -1):
        T[l:, l - 1] = m.transport(P[l], P[l - 1], T[l:, l])
    A = dt[None, :, None] * m.curvature(
        P[None, :-1], ct[None, :], cs_cells[None, :], T
    )
    om = np.zeros((n, P.shape[1]))
    partial = np.zeros((n, P.shape[1]))
    for j in range(n):
        om[j] = partial[j]
        if j + 1 < n:
            partial[j + 1 :] += A[j + 1 :, j]
            partial[j + 1 :] = m.transport(P[j], P[j + 1], partial[j + 1 :])
    return om


def omega_grid(path: CurvePath) -> np.ndarray:
    """The curvature term at every (s_i, t_k), raised to T_{c(0,0)}M;
    shape (S+1, n, d).  Identically zero on a flat manifold."""
    qs = _slice_srvs(path)
    rows = np.array(
        [
            _raise_along_slice(path.slices[i], _slice_omega_nodes(path, i, qs[i]))
            for i in range(path.S + 1)
        ]
    )
    return _raise_along_origins(path, rows)


def omega(path: CurvePath, i: int, k: int) -> Tangent:
    """The curvature term at (s_i, t_k) as a vector in T_{c(0,0)}M."""
    c = path.slices[i]
    if not 0 <= k < c.n:
        raise IndexError(f"t-cell index {k} out of range 0..{c.n - 1}")
    q = srvf(c).q
    row = _raise_along_slice(c, _slice_omega_nodes(path, i, q))
    m = path.manifold
    o = path.origins
    vec = row[k]
    for j in range(i, 0, -1):
        vec = m.transport(o[j], o[j - 1], vec)
    return Tangent(path.base_point, vec)


def _raised_length(path: CurvePath, with_omega: bool) -> float:
    raised = raise_q(path)
    om = omega_grid(path) if with_omega else None
    orates = _origin_rates(path)
    dt = np.diff(path.times)
    total = 0.0
    for i in range(path.S):
        rate = (raised[i + 1] - raised[i]) / path.ds[i]
        if with_omega:
            rate = rate + om[i]
        e = np.dot(orates[i], orates[i]) + float(
            np.sum(dt * np.einsum("ij,ij->i", rate, rate))
        )
        total += path.ds[i] * np.sqrt(e)
    return float(total)


def path_length_raised(path: CurvePath) -> float:
    """Path length computed in the fixed tangent space at c(0,0): plain
    difference quotients of the raised SRV surface corrected by the
    curvature term.  Agrees with path_length up to discretization error."""
    return _raised_length(path, with_omega=True)


def zhang_path_length(path: CurvePath) -> float:
    """The raised-space length with the curvature term dropped; the
    tangent-space distance functional of the transported-SRVF framework.
    Comparison baseline only."""
    return _raised_length(path, with_omega=False)


def _require_aligned(c: DiscreteCurve, f) -> None:
    if f.curve is c:
        return
    if f.curve.same_grid(c) and np.array_equal(f.curve.points, c.points):
        return
    raise BaseMismatch("field is not aligned with the curve")
