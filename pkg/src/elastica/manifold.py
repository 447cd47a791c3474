"""Geometry kernel for the base manifold: exp/log maps, parallel transport
along geodesics, the curvature tensor, and validity projections.

Two manifolds ship: ``Euclidean(d)`` and the unit ``Sphere(d)`` embedded in
R^{d+1}.  Points and tangent vectors are ambient-coordinate numpy arrays;
every operation broadcasts over leading axes, so whole fields can be moved
in one call.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import BaseMismatch, CutLocus, DegenerateInput, WrongManifold

TOL_POINT = 1e-10
TOL_TAN = 1e-10
TOL_CUT = 1e-6
SMALL_ANGLE = 1e-8


@dataclass(frozen=True)
class Tangent:
    """A tangent vector together with its foot point, both in ambient coords."""

    base: np.ndarray
    vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "vec", np.asarray(self.vec, dtype=float))
        if self.base.shape != self.vec.shape:
            raise BaseMismatch(
                f"base shape {self.base.shape} != vec shape {self.vec.shape}"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))


def inner(u: Tangent, v: Tangent) -> float:
    """Riemannian inner product of two tangent vectors at one foot point.

    For both supported manifolds (isometrically embedded) this is the
    ambient dot product.  Raises BaseMismatch if the foot points differ.
    """
    if np.max(np.abs(u.base - v.base)) > TOL_POINT:
        raise BaseMismatch("tangent vectors are based at different points")
    return float(np.dot(u.vec, v.vec))


class Manifold(ABC):
    """Base manifold M with closed-form geometry callbacks.

    All methods accept arrays of shape (..., ambient_dim) and broadcast over
    the leading axes.  They are pure functions; instances are immutable.
    """

    kind: str
    ambient_dim: int

    @abstractmethod
    def exp(self, p: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Endpoint of the unit-time geodesic from p with initial velocity u."""

    @abstractmethod
    def log(self, p: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Inverse of exp: the velocity at p of the minimizing geodesic to x."""

    @abstractmethod
    def transport(self, p: np.ndarray, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Parallel transport of u from p to x along the minimizing geodesic."""

    @abstractmethod
    def curvature(
        self, p: np.ndarray, x: np.ndarray, y: np.ndarray, z: np.ndarray
    ) -> np.ndarray:
        """Curvature tensor R(x, y)z at p, convention
        R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z."""

    @abstractmethod
    def project(self, p: np.ndarray) -> np.ndarray:
        """Nearest valid manifold point to a raw ambient vector."""

    @abstractmethod
    def project_tangent(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Tangential component at p of a raw ambient vector."""

    @abstractmethod
    def check_point(self, p: np.ndarray) -> None:
        """Raise WrongManifold if p is not a valid point (within TOL_POINT)."""

    def inner(self, u: np.ndarray, v: np.ndarray):
        """Riemannian metric; the ambient dot product for both manifolds."""
        return np.sum(u * v, axis=-1)

    def norm(self, u: np.ndarray):
        return np.linalg.norm(u, axis=-1)

    def dist(self, p: np.ndarray, x: np.ndarray):
        """Geodesic distance |log_p(x)|."""
        return self.norm(self.log(p, x))

    def exp_point(self, p: np.ndarray, u: Tangent) -> np.ndarray:
        if np.max(np.abs(u.base - p)) > TOL_POINT:
            raise BaseMismatch("tangent is not based at p")
        return self.exp(p, u.vec)

    def log_point(self, p: np.ndarray, x: np.ndarray) -> Tangent:
        return Tangent(np.asarray(p, dtype=float), self.log(p, x))

    def transport_geodesic(self, p: np.ndarray, x: np.ndarray, u: Tangent) -> Tangent:
        if np.max(np.abs(u.base - p)) > TOL_POINT:
            raise BaseMismatch("tangent is not based at p")
        return Tangent(np.asarray(x, dtype=float), self.transport(p, x, u.vec))

    def to_json(self) -> dict:
        return {"kind": self.kind, "ambient_dim": self.ambient_dim}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Manifold)
            and self.kind == other.kind
            and self.ambient_dim == other.ambient_dim
        )

    def __hash__(self):
        return hash((self.kind, self.ambient_dim))

    def __repr__(self):
        return f"{type(self).__name__}(ambient_dim={self.ambient_dim})"


class Euclidean(Manifold):
    """Flat R^d with the standard inner product."""

    kind = "euclidean"

    def __init__(self, dim: int):
        if dim < 1:
            raise WrongManifold("Euclidean dimension must be >= 1")
        self.dim = dim
        self.ambient_dim = dim

    def exp(self, p, u):
        return np.asarray(p, dtype=float) + u

    def log(self, p, x):
        return np.asarray(x, dtype=float) - p

    def transport(self, p, x, u):
        return np.broadcast_to(
            np.asarray(u, dtype=float), np.broadcast_shapes(np.shape(x), np.shape(u))
        ).copy()

    def curvature(self, p, x, y, z):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(z)))

    def project(self, p):
        return np.asarray(p, dtype=float)

    def project_tangent(self, p, v):
        return np.asarray(v, dtype=float)

    def check_point(self, p):
        p = np.asarray(p)
        if p.shape[-1] != self.ambient_dim:
            raise WrongManifold(
                f"point has ambient dim {p.shape[-1]}, expected {self.ambient_dim}"
            )


class Sphere(Manifold):
    """Unit sphere S^d embedded in R^{d+1} (intrinsic dim d, curvature +1)."""

    kind = "sphere"

    def __init__(self, dim: int):
        if dim < 2:
            raise WrongManifold("Sphere intrinsic dimension must be >= 2")
        self.dim = dim
        self.ambient_dim = dim + 1

    def exp(self, p, u):
        p = np.asarray(p, dtype=float)
        u = np.asarray(u, dtype=float)
        theta = np.linalg.norm(u, axis=-1, keepdims=True)
        small = theta < SMALL_ANGLE
        # series fallback: step linearly then re-project (avoids 0/0)
        safe = np.where(small, 1.0, theta)
        out = np.cos(theta) * p + np.sin(safe) / safe * u
        lin = p + u
        out = np.where(small, lin, out)
        return self._normalize(out)

    def log(self, p, x):
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        cos = np.clip(np.sum(p * x, axis=-1, keepdims=True), -1.0, 1.0)
        theta = np.arccos(cos)
        if np.any(theta > np.pi - TOL_CUT):
            raise CutLocus(
                "antipodal points: log map undefined within tol_cut "
                f"(max angle {float(np.max(theta)):.12f})"
            )
        w = x - cos * p  # tangential component, |w| = sin(theta)
        small = theta < SMALL_ANGLE
        sin = np.sin(theta)
        scale = np.where(small, 1.0, theta / np.where(small, 1.0, sin))
        return scale * w

    def transport(self, p, x, u):
        p = np.asarray(p, dtype=float)
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        w = self.log(p, x)
        theta = np.linalg.norm(w, axis=-1, keepdims=True)
        small = (theta < SMALL_ANGLE)[..., 0]
        safe = np.where(theta < SMALL_ANGLE, 1.0, theta)
        e = w / safe
        ue = np.sum(u * e, axis=-1, keepdims=True)
        # rotate in span(p, e); the orthogonal complement is fixed
        out = u + ue * ((np.cos(theta) - 1.0) * e - np.sin(theta) * p)
        if np.any(small):
            near = self._tangentialize(x, u)
            out = np.where(small[..., None], near, out)
        return out

    def curvature(self, p, x, y, z):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        yz = np.sum(y * z, axis=-1, keepdims=True)
        xz = np.sum(x * z, axis=-1, keepdims=True)
        return yz * x - xz * y

    def project(self, p):
        p = np.asarray(p, dtype=float)
        n = np.linalg.norm(p, axis=-1, keepdims=True)
        if np.any(n < 1e-12):
            raise DegenerateInput("cannot project the zero vector onto the sphere")
        return p / n

    def project_tangent(self, p, v):
        return self._tangentialize(np.asarray(p, dtype=float), np.asarray(v, dtype=float))

    def check_point(self, p):
        p = np.asarray(p)
        if p.shape[-1] != self.ambient_dim:
            raise WrongManifold(
                f"point has ambient dim {p.shape[-1]}, expected {self.ambient_dim}"
            )
        err = np.abs(np.linalg.norm(p, axis=-1) - 1.0)
        if np.any(err > TOL_POINT):
            raise WrongManifold(
                f"point not on the unit sphere (|1 - |p|| up to {float(np.max(err)):.3e})"
            )

    @staticmethod
    def _normalize(p):
        return p / np.linalg.norm(p, axis=-1, keepdims=True)

    @staticmethod
    def _tangentialize(p, v):
        return v - np.sum(p * v, axis=-1, keepdims=True) * p


def from_json(obj: dict) -> Manifold:
    """Build a manifold from its descriptor {"kind": ..., "ambient_dim": ...}."""
    kind = obj.get("kind")
    ambient = int(obj.get("ambient_dim", 0))
    if kind == "euclidean":
        return Euclidean(ambient)
    if kind == "sphere":
        return Sphere(ambient - 1)
    raise WrongManifold(f"unknown manifold kind {kind!r}")
