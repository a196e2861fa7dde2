"""Domain geometry: defining functions, signed distance, boundary projection,
normal frames, and boundary quadrature.

Conventions used throughout the package:

* Points are 1-D ``numpy`` arrays of length ``d >= 2`` (batches are ``(n, d)``
  arrays).
* A domain is the open set ``{x : rho(x) < 0}`` for a C^2 defining function
  ``rho`` with nonvanishing gradient on the boundary.
* ``signed_distance`` is negative inside and positive outside; the boundary
  distance of an interior point is ``delta(x) = -signed_distance(x)``.
* Inward unit normals are ``-grad rho / |grad rho|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    DomainUnsupportedError,
    InvalidInputError,
    ProjectionAmbiguityError,
)

__all__ = [
    "as_point",
    "Domain",
    "Ball",
    "Halfspace",
    "Ellipse",
    "Implicit",
    "ImplicitPolynomial",
    "BoundaryFrame",
    "boundary_frame",
    "QuadratureRule",
    "boundary_quadrature",
]

_BOUNDARY_TOL = 1e-10
_TIE_TOL = 1e-8


def as_point(x, dim: int | None = None, name: str = "point") -> np.ndarray:
    """Validate and convert ``x`` to a finite 1-D float array of length >= 2."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"{name} must be a 1-D coordinate vector, got shape {arr.shape}")
    if arr.size < 2:
        raise DimensionMismatchError(f"{name} must have dimension >= 2, got {arr.size}")
    if dim is not None and arr.size != dim:
        raise DimensionMismatchError(f"{name} has dimension {arr.size}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite coordinates: {arr}")
    return arr


def _as_batch(X, dim: int, name: str = "points") -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatchError(f"{name} must have shape (n, {dim}), got {arr.shape}")
    return arr


class Domain:
    """Open set ``{x : rho(x) < 0}`` described by a defining function.

    Subclasses provide ``rho``, its gradient (and Hessian where an iterative
    projection solver needs it), signed distance, and boundary projection.
    ``exact_distance`` marks domains whose signed distance is computed to full
    precision (models and the ellipse) as opposed to an iterative solver with
    its own tolerance (implicit domains).
    """

    dim: int
    exact_distance: bool = True

    # -- defining function ------------------------------------------------
    def rho(self, x) -> float:
        raise NotImplementedError

    def rho_grad(self, x) -> np.ndarray:
        raise NotImplementedError

    def rho_hess(self, x) -> np.ndarray:
        raise NotImplementedError

    def rho_batch(self, X) -> np.ndarray:
        X = _as_batch(X, self.dim)
        return np.array([self.rho(row) for row in X])

    # -- metric queries ----------------------------------------------------
    def contains(self, x) -> bool:
        """Strict interior membership (boundary points are not interior)."""
        return self.rho(as_point(x, self.dim)) < 0.0

    def signed_distance(self, x) -> float:
        """Euclidean distance to the boundary, negative inside."""
        raise NotImplementedError

    def signed_distance_batch(self, X) -> np.ndarray:
        X = _as_batch(X, self.dim)
        return np.array([self.signed_distance(row) for row in X])

    def project_to_boundary(self, x, tie_break=None) -> tuple[np.ndarray, np.ndarray]:
        """Nearest boundary point and the inward unit normal there.

        Intended for points inside the collar where the nearest boundary point
        is unique.  If two candidate feet are equidistant within 1e-8 a
        :class:`ProjectionAmbiguityError` is raised unless ``tie_break`` (a
        direction vector) is supplied, in which case the foot with the larger
        projection onto ``tie_break`` is chosen.
        """
        raise NotImplementedError

    def project_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = _as_batch(X, self.dim)
        feet = np.empty_like(X)
        normals = np.empty_like(X)
        for i, row in enumerate(X):
            feet[i], normals[i] = self.project_to_boundary(row)
        return feet, normals

    def diameter(self) -> float:
        """Diameter of the domain (``inf`` for unbounded domains)."""
        raise NotImplementedError

    def bounded(self) -> bool:
        return math.isfinite(self.diameter())

    def descriptor(self) -> dict:
        """JSON-serializable description of the domain."""
        raise NotImplementedError


class Ball(Domain):
    """Open ball of given center and radius (disc in 2-D)."""

    def __init__(self, dim: int | None = None, center=None, radius: float = 1.0):
        if center is None:
            if dim is None:
                raise InvalidInputError("Ball requires a dimension or an explicit center")
            center = np.zeros(int(dim))
        self.center = as_point(center, dim, name="center")
        self.dim = self.center.size
        self.radius = float(radius)
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise InvalidInputError(f"ball radius must be positive and finite, got {radius}")

    def rho(self, x) -> float:
        x = as_point(x, self.dim)
        return float(np.linalg.norm(x - self.center) - self.radius)

    def rho_grad(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        v = x - self.center
        r = np.linalg.norm(v)
        if r < 1e-300:
            raise InvalidInputError("gradient of the ball defining function is undefined at the center")
        return v / r

    def rho_hess(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        v = x - self.center
        r = np.linalg.norm(v)
        if r < 1e-300:
            raise InvalidInputError("Hessian of the ball defining function is undefined at the center")
        u = v / r
        return (np.eye(self.dim) - np.outer(u, u)) / r

    def rho_batch(self, X) -> np.ndarray:
        X = _as_batch(X, self.dim)
        return np.linalg.norm(X - self.center, axis=1) - self.radius

    def signed_distance(self, x) -> float:
        return self.rho(x)

    def signed_distance_batch(self, X) -> np.ndarray:
        return self.rho_batch(X)

    def project_to_boundary(self, x, tie_break=None):
        x = as_point(x, self.dim)
        v = x - self.center
        r = np.linalg.norm(v)
        if r < _TIE_TOL:
            # Every boundary point is (nearly) equidistant from the center.
            if tie_break is None:
                raise ProjectionAmbiguityError(
                    "projection from the ball center is ambiguous: all boundary points are equidistant"
                )
            t = as_point(tie_break, self.dim, name="tie_break")
            tn = np.linalg.norm(t)
            if tn < 1e-300:
                raise InvalidInputError("tie_break direction must be nonzero")
            u = t / tn
        else:
            u = v / r
        foot = self.center + self.radius * u
        return foot, -u

    def project_batch(self, X):
        X = _as_batch(X, self.dim)
        V = X - self.center
        r = np.linalg.norm(V, axis=1)
        if np.any(r < _TIE_TOL):
            raise ProjectionAmbiguityError("projection from the ball center is ambiguous")
        U = V / r[:, None]
        return self.center + self.radius * U, -U

    def diameter(self) -> float:
        return 2.0 * self.radius

    def descriptor(self) -> dict:
        return {
            "kind": "ball",
            "dim": self.dim,
            "radius": self.radius,
            "center": self.center.tolist(),
        }


class Halfspace(Domain):
    """Upper halfspace ``{x : x_d > 0}`` with flat boundary ``{x_d = 0}``."""

    def __init__(self, dim: int):
        self.dim = int(dim)
        if self.dim < 2:
            raise DimensionMismatchError(f"halfspace dimension must be >= 2, got {dim}")

    def rho(self, x) -> float:
        x = as_point(x, self.dim)
        return float(-x[-1])

    def rho_grad(self, x) -> np.ndarray:
        as_point(x, self.dim)
        g = np.zeros(self.dim)
        g[-1] = -1.0
        return g

    def rho_hess(self, x) -> np.ndarray:
        as_point(x, self.dim)
        return np.zeros((self.dim, self.dim))

    def rho_batch(self, X) -> np.ndarray:
        X = _as_batch(X, self.dim)
        return -X[:, -1]

    def signed_distance(self, x) -> float:
        return self.rho(x)

    def signed_distance_batch(self, X) -> np.ndarray:
        return self.rho_batch(X)

    def project_to_boundary(self, x, tie_break=None):
        x = as_point(x, self.dim)
        foot = x.copy()
        foot[-1] = 0.0
        normal = np.zeros(self.dim)
        normal[-1] = 1.0
        return foot, normal

    def project_batch(self, X):
        X = _as_batch(X, self.dim)
        feet = X.copy()
        feet[:, -1] = 0.0
        normals = np.zeros_like(X)
        normals[:, -1] = 1.0
        return feet, normals

    def diameter(self) -> float:
        return math.inf

    def descriptor(self) -> dict:
        return {"kind": "halfspace", "dim": self.dim}


def _ellipse_feet(P: np.ndarray, a: float, b: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Nearest-point feet on the axis-aligned ellipse (a >= b) for points ``P``.

    Returns ``(feet, mirror_feet, dist, mirror_dist)`` where ``mirror_feet``
    are the feet reflected across the major axis -- the competing critical
    points whose distance ties signal an ambiguous projection.

    Solves ``F(u) = (a p / (u + a^2 - b^2))^2 + (b q / u)^2 - 1 = 0`` for the
    shifted Lagrange multiplier ``u = t + b^2 > 0`` by Newton iteration from
    ``u0 = b q``.  ``F`` is convex and decreasing on ``(0, inf)`` with
    ``F(u0) >= 0``, so the iteration increases monotonically to the unique
    root; the foot is then ``(a^2 p / (u + a^2 - b^2), b^2 q / u)``.  Working
    in ``u`` rather than ``t`` avoids the catastrophic cancellation of
    ``t + b^2`` for points near the major axis, where the root has tiny ``u``.
    Points exactly on the major axis with ``|p| < (a^2 - b^2)/a`` take the
    closed-form off-axis branch instead.
    """
    P = np.asarray(P, dtype=float)
    p = np.abs(P[:, 0])
    q = np.abs(P[:, 1])
    sx = np.where(P[:, 0] >= 0.0, 1.0, -1.0)
    sy = np.where(P[:, 1] >= 0.0, 1.0, -1.0)
    fx = np.empty_like(p)
    fy = np.empty_like(q)

    on_axis = q == 0.0
    generic = ~on_axis

    if np.any(on_axis):
        pa = p[on_axis]
        fxa = np.empty_like(pa)
        fya = np.empty_like(pa)
        crit = (a * a - b * b) / a  # evolute cusp on the major axis
        off = pa < crit
        # Inside the cusp the nearest points leave the axis symmetrically.
        xo = a * a * pa[off] / (a * a - b * b) if np.any(off) else np.empty(0)
        fxa[off] = xo
        fya[off] = b * np.sqrt(np.maximum(0.0, 1.0 - (xo / a) ** 2))
        fxa[~off] = a
        fya[~off] = 0.0
        fx[on_axis] = fxa
        fy[on_axis] = fya

    if np.any(generic):
        pg = p[generic]
        qg = q[generic]
        shift = a * a - b * b
        u = b * qg
        converged = False
        for _ in range(100):
            ra = a * pg / (u + shift)
            rb = b * qg / u
            F = ra * ra + rb * rb - 1.0
            if np.all(np.abs(F) < 1e-13):
                converged = True
                break
            dF = -2.0 * (ra * ra / (u + shift) + rb * rb / u)
            step = F / dF
            # Monotone increasing sequence; a sub-ulp step means we are done.
            if np.all(np.abs(step) <= np.finfo(float).eps * u):
                converged = True
                break
            u = u - step
        if not converged:
            raise ConvergenceError("ellipse nearest-point iteration did not converge")
        fx[generic] = a * a * pg / (u + shift)
        fy[generic] = b * b * qg / u

    feet = np.stack([sx * fx, sy * fy], axis=1)
    mirror = np.stack([sx * fx, -sy * fy], axis=1)
    dist = np.hypot(p - fx, q - fy)
    mirror_dist = np.hypot(p - fx, q + fy)
    return feet, mirror, dist, mirror_dist


class Ellipse(Domain):
    """Open 2-D ellipse ``(x/a)^2 + (y/b)^2 < 1`` with axis-aligned semi-axes.

    The canonical smooth non-model test domain: closed-form parametrization,
    exact curvature, and a fast Newton nearest-point solver.  Only the
    two-dimensional case is supported; higher-dimensional ellipsoids can be
    expressed as implicit polynomial domains (without exact distance).
    """

    def __init__(self, semi_axes: Sequence[float]):
        axes = np.asarray(semi_axes, dtype=float)
        if axes.shape != (2,):
            raise DomainUnsupportedError(
                f"ellipse domains are two-dimensional (got {axes.size} semi-axes); "
                "use an implicit polynomial domain for ellipsoids"
            )
        if not (np.all(axes > 0.0) and np.all(np.isfinite(axes))):
            raise InvalidInputError(f"semi-axes must be positive and finite, got {semi_axes}")
        if axes[0] == axes[1]:
            raise InvalidInputError(
                "equal semi-axes describe a circle; use Ball, whose projection "
                "handles the all-directions tie at the center"
            )
        self.semi_axes = axes
        self.dim = 2

    def _major_frame(self) -> tuple[float, float, bool]:
        """Semi-axes ordered major-first, plus whether coordinates were swapped."""
        a, b = self.semi_axes
        if a >= b:
            return float(a), float(b), False
        return float(b), float(a), True

    def rho(self, x) -> float:
        x = as_point(x, 2)
        a, b = self.semi_axes
        return float((x[0] / a) ** 2 + (x[1] / b) ** 2 - 1.0)

    def rho_grad(self, x) -> np.ndarray:
        x = as_point(x, 2)
        a, b = self.semi_axes
        return np.array([2.0 * x[0] / (a * a), 2.0 * x[1] / (b * b)])

    def rho_hess(self, x) -> np.ndarray:
        as_point(x, 2)
        a, b = self.semi_axes
        return np.diag([2.0 / (a * a), 2.0 / (b * b)])

    def rho_batch(self, X) -> np.ndarray:
        X = _as_batch(X, 2)
        a, b = self.semi_axes
        return (X[:, 0] / a) ** 2 + (X[:, 1] / b) ** 2 - 1.0

    def _feet(self, X: np.ndarray):
        a, b, swapped = self._major_frame()
        P = X[:, ::-1] if swapped else X
        feet, mirror, dist, mdist = _ellipse_feet(P, a, b)
        if swapped:
            feet = feet[:, ::-1]
            mirror = mirror[:, ::-1]
        return feet, mirror, dist, mdist

    def signed_distance(self, x) -> float:
        x = as_point(x, 2)
        _, _, dist, _ = self._feet(x[None, :])
        return float(-dist[0] if self.rho(x) < 0.0 else dist[0])

    def signed_distance_batch(self, X) -> np.ndarray:
        X = _as_batch(X, 2)
        _, _, dist, _ = self._feet(X)
        return np.where(self.rho_batch(X) < 0.0, -dist, dist)

    def project_to_boundary(self, x, tie_break=None):
        x = as_point(x, 2)
        feet, mirror, dist, mdist = self._feet(x[None, :])
        foot, twin = feet[0], mirror[0]
        distinct = np.linalg.norm(foot - twin) > _TIE_TOL
        if distinct and (mdist[0] - dist[0]) < _TIE_TOL:
            if tie_break is None:
                raise ProjectionAmbiguityError(
                    f"point {x.tolist()} is equidistant from boundary feet "
                    f"{foot.tolist()} and {twin.tolist()}; supply a tie_break direction"
                )
            t = as_point(tie_break, 2, name="tie_break")
            if np.linalg.norm(t) < 1e-300:
                raise InvalidInputError("tie_break direction must be nonzero")
            if np.dot(t, twin) > np.dot(t, foot):
                foot = twin
        g = self.rho_grad(foot)
        return foot, -g / np.linalg.norm(g)

    def project_batch(self, X):
        X = _as_batch(X, 2)
        feet, mirror, dist, mdist = self._feet(X)
        distinct = np.linalg.norm(feet - mirror, axis=1) > _TIE_TOL
        ties = distinct & ((mdist - dist) < _TIE_TOL)
        if np.any(ties):
            raise ProjectionAmbiguityError(
                f"{int(ties.sum())} points have equidistant boundary feet; "
                "project them individually with a tie_break direction"
            )
        a, b = self.semi_axes
        G = np.stack([2.0 * feet[:, 0] / (a * a), 2.0 * feet[:, 1] / (b * b)], axis=1)
        return feet, -G / np.linalg.norm(G, axis=1)[:, None]

    def boundary_point(self, theta: float) -> np.ndarray:
        """Point ``(a cos(theta), b sin(theta))`` on the boundary."""
        a, b = self.semi_axes
        return np.array([a * math.cos(theta), b * math.sin(theta)])

    def boundary_speed(self, theta) -> np.ndarray:
        """``|gamma'(theta)|`` for the parametrization above."""
        a, b = self.semi_axes
        th = np.asarray(theta, dtype=float)
        return np.sqrt((a * np.sin(th)) ** 2 + (b * np.cos(th)) ** 2)

    def min_curvature_radius(self) -> float:
        """Smallest radius of curvature, attained at the major-axis vertices."""
        a, b, _ = self._major_frame()
        return b * b / a

    def diameter(self) -> float:
        return 2.0 * float(np.max(self.semi_axes))

    def descriptor(self) -> dict:
        return {"kind": "ellipse", "dim": 2, "semi_axes": self.semi_axes.tolist()}


class Implicit(Domain):
    """Domain defined by a user-supplied C^2 function ``rho`` (negative inside).

    ``grad`` is required; ``hess`` is optional (a central finite difference of
    the gradient is used when absent).  ``bounding_box`` is a ``(2, d)`` array
    of lower/upper corners enclosing the closure of the domain, used to seed
    the projection solver; ``interior_point`` is a declared witness with
    ``rho < 0``, checked at construction.

    Signed distance and projection solve the nearest-point conditions
    ``y - x + lam * grad(y) = 0, rho(y) = 0`` with a damped Newton iteration
    (cap 100 iterations, tolerance 1e-12 on the residual), multi-started from
    a coarse grid over the bounding box flowed onto the zero level set.
    """

    exact_distance = False

    def __init__(
        self,
        rho: Callable[[np.ndarray], float],
        grad: Callable[[np.ndarray], np.ndarray],
        bounding_box,
        interior_point,
        hess: Callable[[np.ndarray], np.ndarray] | None = None,
        kind: str = "implicit",
    ):
        self._rho = rho
        self._grad = grad
        self._hess = hess
        box = np.asarray(bounding_box, dtype=float)
        if box.ndim != 2 or box.shape[0] != 2 or box.shape[1] < 2:
            raise InvalidInputError(f"bounding_box must have shape (2, d), got {box.shape}")
        if not np.all(box[0] < box[1]):
            raise InvalidInputError("bounding_box lower corner must be strictly below the upper corner")
        self.bounding_box = box
        self.dim = box.shape[1]
        self.interior_point = as_point(interior_point, self.dim, name="interior_point")
        if not np.all((self.interior_point >= box[0]) & (self.interior_point <= box[1])):
            raise InvalidInputError("interior witness point lies outside the bounding box")
        self.kind = kind
        witness = float(rho(self.interior_point))
        if not witness < 0.0:
            raise InvalidInputError(
                f"defining function is not negative at the declared interior point (rho = {witness})"
            )

    def rho(self, x) -> float:
        return float(self._rho(as_point(x, self.dim)))

    def rho_grad(self, x) -> np.ndarray:
        return np.asarray(self._grad(as_point(x, self.dim)), dtype=float)

    def rho_hess(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        if self._hess is not None:
            return np.asarray(self._hess(x), dtype=float)
        h = 1e-6
        H = np.empty((self.dim, self.dim))
        for j in range(self.dim):
            step = np.zeros(self.dim)
            step[j] = h
            H[:, j] = (self.rho_grad(x + step) - self.rho_grad(x - step)) / (2.0 * h)
        return 0.5 * (H + H.T)

    # -- nearest-point solver ---------------------------------------------
    def _seed_candidates(self, x: np.ndarray) -> list[np.ndarray]:
        lo, hi = self.bounding_box
        m = max(6, min(16, int(round(4096 ** (1.0 / self.dim)))))
        axes = [np.linspace(lo[j], hi[j], m) for j in range(self.dim)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.dim)
        # Flow each sample a few first-order steps toward the zero level set.
        y = grid.copy()
        for _ in range(8):
            for i in range(y.shape[0]):
                g = self.rho_grad(y[i])
                g2 = float(np.dot(g, g))
                if g2 > 1e-20:
                    y[i] = y[i] - self.rho(y[i]) * g / g2
        order = np.argsort(np.linalg.norm(y - x, axis=1))
        picked: list[np.ndarray] = []
        for idx in order:
            cand = y[idx]
            if not np.all(np.isfinite(cand)):
                continue
            if any(np.linalg.norm(cand - p) < 1e-6 for p in picked):
                continue
            picked.append(cand)
            if len(picked) >= 5:
                break
        if not picked:
            raise ConvergenceError("no usable starting points for the implicit projection solver")
        return picked

    def _newton_foot(self, x: np.ndarray, y0: np.ndarray) -> np.ndarray | None:
        scale = max(1.0, float(np.linalg.norm(x)))
        y = y0.astype(float).copy()
        g = self.rho_grad(y)
        g2 = float(np.dot(g, g))
        lam = float(np.dot(x - y, g) / g2) if g2 > 1e-20 else 0.0

        def residual(yv, lv):
            gv = self.rho_grad(yv)
            return np.concatenate([yv - x + lv * gv, [self.rho(yv)]])

        r = residual(y, lam)
        for _ in range(100):
            if np.linalg.norm(r) <= 1e-12 * scale:
                return y
            g = self.rho_grad(y)
            H = self.rho_hess(y)
            J = np.zeros((self.dim + 1, self.dim + 1))
            J[: self.dim, : self.dim] = np.eye(self.dim) + lam * H
            J[: self.dim, self.dim] = g
            J[self.dim, : self.dim] = g
            try:
                step = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError:
                return None
            alpha = 1.0
            norm_r = np.linalg.norm(r)
            for _ in range(30):
                y_new = y + alpha * step[: self.dim]
                lam_new = lam + alpha * step[self.dim]
                r_new = residual(y_new, lam_new)
                if np.linalg.norm(r_new) < (1.0 - 1e-4 * alpha) * norm_r:
                    break
                alpha *= 0.5
            else:
                return None
            y, lam, r = y_new, lam_new, r_new
        return y if np.linalg.norm(r) <= 1e-12 * scale else None

    def _feet_candidates(self, x: np.ndarray) -> list[tuple[float, np.ndarray]]:
        feet: list[tuple[float, np.ndarray]] = []
        for y0 in self._seed_candidates(x):
            foot = self._newton_foot(x, y0)
            if foot is None:
                continue
            if any(np.linalg.norm(foot - f) < 1e-6 for _, f in feet):
                continue
            feet.append((float(np.linalg.norm(x - foot)), foot))
        if not feet:
            raise ConvergenceError("implicit-domain projection did not converge from any starting point")
        feet.sort(key=lambda pair: pair[0])
        return feet

    def signed_distance(self, x) -> float:
        x = as_point(x, self.dim)
        dist = self._feet_candidates(x)[0][0]
        return -dist if self.rho(x) < 0.0 else dist

    def project_to_boundary(self, x, tie_break=None):
        x = as_point(x, self.dim)
        feet = self._feet_candidates(x)
        best_d, best = feet[0]
        if len(feet) > 1:
            next_d, nxt = feet[1]
            if next_d - best_d < _TIE_TOL and np.linalg.norm(nxt - best) > 1e-6:
                if tie_break is None:
                    raise ProjectionAmbiguityError(
                        f"point {x.tolist()} has equidistant boundary feet "
                        f"{best.tolist()} and {nxt.tolist()}; supply a tie_break direction"
                    )
                t = as_point(tie_break, self.dim, name="tie_break")
                if np.dot(t, nxt) > np.dot(t, best):
                    best = nxt
        g = self.rho_grad(best)
        gn = np.linalg.norm(g)
        if gn < 1e-12:
            raise InvalidInputError("degenerate gradient at the projected boundary point")
        return best, -g / gn

    def diameter(self) -> float:
        lo, hi = self.bounding_box
        return float(np.linalg.norm(hi - lo))

    def descriptor(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "bounding_box": self.bounding_box.tolist(),
            "interior_point": self.interior_point.tolist(),
        }


class ImplicitPolynomial(Implicit):
    """Implicit domain whose defining function is a polynomial.

    ``coefficients`` maps exponent tuples to coefficients, e.g. the unit disc
    is ``{(2, 0): 1.0, (0, 2): 1.0, (0, 0): -1.0}``.  Gradient and Hessian are
    exact polynomial derivatives.
    """

    def __init__(self, coefficients: dict, bounding_box, interior_point, dim: int | None = None):
        items = sorted(coefficients.items())
        if not items:
            raise InvalidInputError("polynomial needs at least one term")
        exps = []
        for key, _ in items:
            key = tuple(int(e) for e in key)
            if any(e < 0 for e in key):
                raise InvalidInputError(f"exponents must be nonnegative integers, got {key}")
            exps.append(key)
        lengths = {len(e) for e in exps}
        if len(lengths) != 1:
            raise InvalidInputError("all exponent tuples must have the same length")
        d = lengths.pop()
        if dim is not None and dim != d:
            raise DimensionMismatchError(f"exponent tuples have length {d}, expected dim {dim}")
        if d < 2:
            raise DimensionMismatchError(f"polynomial domain dimension must be >= 2, got {d}")
        self._exponents = np.array(exps, dtype=int)
        self._coeffs = np.array([float(c) for _, c in items])
        self._poly_terms = items

        def rho(x: np.ndarray) -> float:
            return float(np.sum(self._coeffs * np.prod(x[None, :] ** self._exponents, axis=1)))

        def grad(x: np.ndarray) -> np.ndarray:
            g = np.empty(d)
            for j in range(d):
                cj = self._coeffs * self._exponents[:, j]
                ej = self._exponents.copy()
                ej[:, j] = np.maximum(ej[:, j] - 1, 0)
                g[j] = float(np.sum(cj * np.prod(x[None, :] ** ej, axis=1)))
            return g

        def hess(x: np.ndarray) -> np.ndarray:
            H = np.empty((d, d))
            for j in range(d):
                for k in range(j, d):
                    e = self._exponents
                    cjk = self._coeffs * e[:, j] * (e[:, k] - (1 if j == k else 0))
                    ejk = e.copy()
                    ejk[:, j] -= 1
                    ejk[:, k] -= 1
                    ejk = np.maximum(ejk, 0)
                    H[j, k] = H[k, j] = float(np.sum(cjk * np.prod(x[None, :] ** ejk, axis=1)))
            return H

        super().__init__(rho, grad, bounding_box, interior_point, hess=hess, kind="implicit_polynomial")

    def rho_batch(self, X) -> np.ndarray:
        X = _as_batch(X, self.dim)
        return np.sum(self._coeffs * np.prod(X[:, None, :] ** self._exponents[None, :, :], axis=2), axis=1)

    def descriptor(self) -> dict:
        desc = super().descriptor()
        desc["coefficients"] = {
            ",".join(str(e) for e in key): coeff for key, coeff in self._poly_terms
        }
        return desc


# ---------------------------------------------------------------------------
# Boundary frames
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryFrame:
    """Normalized coordinates at a boundary point.

    ``base`` is a point P on the boundary, ``inward_normal`` the inward unit
    normal nu there, ``rotation`` a proper rotation Q with ``Q nu = e_d``, and
    ``epsilon`` the frame scale (the distance from P of the interior probe
    point ``P + epsilon * nu``, which the frame dilation sends to ``e_d``).
    """

    base: np.ndarray
    inward_normal: np.ndarray
    rotation: np.ndarray
    epsilon: float

    def __post_init__(self):
        base = as_point(self.base, name="base")
        nu = as_point(self.inward_normal, base.size, name="inward_normal")
        Q = np.asarray(self.rotation, dtype=float)
        d = base.size
        if Q.shape != (d, d):
            raise DimensionMismatchError(f"rotation must be {d}x{d}, got {Q.shape}")
        if not (self.epsilon > 0.0 and math.isfinite(self.epsilon)):
            raise InvalidInputError(f"epsilon must be positive and finite, got {self.epsilon}")
        if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
            raise InvalidInputError("inward_normal must be a unit vector")
        if np.max(np.abs(Q.T @ Q - np.eye(d))) > 1e-12:
            raise InvalidInputError("rotation is not orthogonal to 1e-12")
        if abs(np.linalg.det(Q) - 1.0) > 1e-10:
            raise InvalidInputError("rotation must have determinant +1")
        if np.max(np.abs(Q @ nu - np.eye(d)[-1])) > 1e-12:
            raise InvalidInputError("rotation must map the inward normal to +e_d")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "inward_normal", nu)
        object.__setattr__(self, "rotation", Q)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def dim(self) -> int:
        return self.base.size


def rotation_to_last_axis(nu: np.ndarray) -> np.ndarray:
    """Deterministic proper rotation Q with ``Q nu = e_d``.

    Rows are a Gram-Schmidt orthonormalization of the standard basis against
    ``nu`` (kept in index order, dropping near-dependent candidates), with the
    normal as the last row; the first tangent row is flipped if needed to make
    ``det Q = +1``.  The construction depends only on ``nu``, so frames are
    reproducible across runs and platforms.
    """
    nu = np.asarray(nu, dtype=float)
    d = nu.size
    basis = [nu]
    for j in range(d):
        if len(basis) == d:
            break
        v = np.zeros(d)
        v[j] = 1.0
        for b in basis:
            v = v - np.dot(v, b) * b
        norm = np.linalg.norm(v)
        if norm > 1e-10:
            basis.append(v / norm)
    if len(basis) != d:
        raise ConvergenceError("failed to complete an orthonormal frame")
    Q = np.vstack([np.vstack(basis[1:]), nu[None, :]])
    if np.linalg.det(Q) < 0.0:
        Q[0] = -Q[0]
    return Q


def boundary_frame(domain: Domain, base, epsilon: float) -> BoundaryFrame:
    """Frame at a boundary point: inward normal, aligning rotation, and scale.

    Requires ``base`` on the boundary (|rho| <= 1e-10), a nondegenerate
    gradient there, and ``epsilon`` small enough that ``base + epsilon * nu``
    is interior.
    """
    base = as_point(base, domain.dim, name="base")
    if abs(domain.rho(base)) > _BOUNDARY_TOL:
        raise InvalidInputError(
            f"base point is not on the boundary (rho = {domain.rho(base):.3e})"
        )
    g = domain.rho_grad(base)
    gn = np.linalg.norm(g)
    if gn < 1e-12:
        raise InvalidInputError("degenerate gradient at the base point")
    nu = -g / gn
    if not (epsilon > 0.0 and math.isfinite(epsilon)):
        raise InvalidInputError(f"epsilon must be positive and finite, got {epsilon}")
    probe = base + epsilon * nu
    if not domain.contains(probe):
        raise InvalidInputError(
            f"epsilon = {epsilon} steps outside the domain from base {base.tolist()}"
        )
    return BoundaryFrame(base=base, inward_normal=nu, rotation=rotation_to_last_axis(nu), epsilon=epsilon)


# ---------------------------------------------------------------------------
# Boundary quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Boundary quadrature nodes and weights.

    ``spacing`` is the largest nearest-node gap along the surface, used to
    refuse under-resolved near-boundary integrals.  Iterating yields
    ``(node, weight)`` pairs.
    """

    nodes: np.ndarray
    weights: np.ndarray
    spacing: float

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 2 or weights.ndim != 1 or nodes.shape[0] != weights.shape[0]:
            raise DimensionMismatchError("nodes must be (n, d) with matching (n,) weights")
        if not np.all(weights > 0.0):
            raise InvalidInputError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __iter__(self) -> Iterator[tuple[np.ndarray, float]]:
        return ((self.nodes[i], float(self.weights[i])) for i in range(len(self)))

    def __len__(self) -> int:
        return self.nodes.shape[0]

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))


def _circle_rule(center: np.ndarray, radius: float, n: int) -> QuadratureRule:
    theta = 2.0 * np.pi * np.arange(n) / n
    nodes = center[None, :] + radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    weights = np.full(n, 2.0 * np.pi * radius / n)
    return QuadratureRule(nodes, weights, spacing=2.0 * np.pi * radius / n)


def _sphere_rule(center: np.ndarray, radius: float, resolution: int) -> QuadratureRule:
    # Gauss-Legendre in cos(polar) x uniform azimuth: exact total area, spectral
    # accuracy for smooth integrands.
    mu, w = np.polynomial.legendre.leggauss(resolution)
    m = 2 * resolution
    phi = 2.0 * np.pi * np.arange(m) / m
    s = np.sqrt(np.maximum(0.0, 1.0 - mu * mu))
    x = np.outer(s, np.cos(phi)).ravel()
    y = np.outer(s, np.sin(phi)).ravel()
    z = np.repeat(mu, m)
    nodes = center[None, :] + radius * np.stack([x, y, z], axis=1)
    weights = np.repeat(w, m) * (radius * radius * 2.0 * np.pi / m)
    spacing = max(np.pi * radius / resolution, 2.0 * np.pi * radius / m)
    return QuadratureRule(nodes, weights, spacing=spacing)


def _ellipse_rule(domain: Ellipse, n: int) -> QuadratureRule:
    a, b = domain.semi_axes
    theta = 2.0 * np.pi * np.arange(n) / n
    nodes = np.stack([a * np.cos(theta), b * np.sin(theta)], axis=1)
    speed = domain.boundary_speed(theta)
    weights = speed * (2.0 * np.pi / n)
    spacing = float(np.max(speed)) * 2.0 * np.pi / n
    return QuadratureRule(nodes, weights, spacing=spacing)


def _halfspace_rule(domain: Halfspace, resolution: int, truncation: float) -> QuadratureRule:
    if not (truncation and truncation > 0.0 and math.isfinite(truncation)):
        raise InvalidInputError("halfspace quadrature requires a positive truncation radius")
    t, w = np.polynomial.legendre.leggauss(resolution)
    if domain.dim == 2:
        nodes = np.stack([truncation * t, np.zeros(resolution)], axis=1)
        weights = truncation * w
        gaps = np.diff(np.sort(truncation * t))
        spacing = float(np.max(gaps))
        return QuadratureRule(nodes, weights, spacing=spacing)
    if domain.dim == 3:
        r = 0.5 * truncation * (t + 1.0)
        wr = 0.5 * truncation * w
        m = 2 * resolution
        phi = 2.0 * np.pi * np.arange(m) / m
        x = np.outer(r, np.cos(phi)).ravel()
        y = np.outer(r, np.sin(phi)).ravel()
        nodes = np.stack([x, y, np.zeros(x.size)], axis=1)
        weights = np.repeat(wr * r, m) * (2.0 * np.pi / m)
        radial_gap = float(np.max(np.diff(np.sort(np.concatenate([[0.0], r, [truncation]])))))
        spacing = max(radial_gap, 2.0 * np.pi * truncation / m)
        # Drop the degenerate r = 0 ring if Gauss-Legendre ever produced one.
        keep = weights > 0.0
        return QuadratureRule(nodes[keep], weights[keep], spacing=spacing)
    raise DomainUnsupportedError(
        f"halfspace boundary quadrature is implemented for d in {{2, 3}}, got d = {domain.dim}"
    )


def boundary_quadrature(domain: Domain, resolution: int, truncation: float | None = None) -> QuadratureRule:
    """Quadrature rule for surface integrals over the domain boundary.

    Supports circles (trapezoidal, equal weights), spheres (Gauss-Legendre in
    the polar cosine times uniform azimuth), ellipses (trapezoidal against the
    arc-length element), and truncated halfspace boundaries in d = 2, 3
    (Gauss-Legendre; ``truncation`` is the required cutoff radius).  Weights
    sum to the surface area (circle 2*pi*r, sphere 4*pi*r^2, ellipse
    perimeter) to well below 1e-8 at moderate resolution.
    """
    resolution = int(resolution)
    if resolution < 8:
        raise InvalidInputError(f"resolution must be >= 8, got {resolution}")
    if isinstance(domain, Ball):
        if domain.dim == 2:
            return _circle_rule(domain.center, domain.radius, resolution)
        if domain.dim == 3:
            return _sphere_rule(domain.center, domain.radius, resolution)
        raise DomainUnsupportedError(
            f"ball boundary quadrature is implemented for d in {{2, 3}}, got d = {domain.dim}"
        )
    if isinstance(domain, Ellipse):
        return _ellipse_rule(domain, resolution)
    if isinstance(domain, Halfspace):
        return _halfspace_rule(domain, resolution, truncation)
    raise DomainUnsupportedError(
        f"boundary quadrature is not available for {type(domain).__name__} domains"
    )
