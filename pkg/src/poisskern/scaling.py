"""Boundary blow-up analysis: frame dilation, transferred defining function,
pulled-back kernels, and the flat-boundary (halfspace) surrogate kernel.

Given a boundary frame (base point P, inward normal nu, rotation Q with
``Q nu = e_d``, scale eps), the dilation ``Phi(x) = Q (x - P) / eps`` maps the
domain to a blown-up copy whose boundary flattens as eps -> 0:

* the transferred defining function ``rho_eps(s) = rho(Phi^{-1} s) / (eps g)``
  (with ``g = |grad rho(P)|``) converges to the linear function ``-s_d``, and
  :func:`linearization_gap` measures how far it still is from that limit;
* the pulled-back kernel ``K(x, tau) = eps^{-(d-1)} P_scaled(Phi x, Phi tau)``
  reproduces the original domain's Poisson kernel exactly whenever
  ``P_scaled`` is the exact kernel of the dilated domain;
* :func:`halfspace_surrogate` is the explicit flat-boundary approximant the
  blow-up justifies near the base point.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .errors import DomainUnsupportedError, InvalidInputError
from .geometry import Ball, BoundaryFrame, Domain, Halfspace, as_point
from .model_kernels import KernelEvaluator, ball_kernel, halfspace_constant, halfspace_kernel

__all__ = [
    "phi_eps",
    "phi_eps_inverse",
    "TransferredDefiningFunction",
    "transfer_defining_function",
    "linearization_gap",
    "kernel_pullback",
    "scaled_model_kernel",
    "halfspace_surrogate",
]

_GRID_SIZE = 4096
_GRID_SHELL = 512


def phi_eps(frame: BoundaryFrame, x) -> np.ndarray:
    """Frame dilation ``Phi(x) = Q (x - P) / eps`` (accepts point or batch).

    Sends the base point to the origin and the interior probe
    ``P + eps * nu`` to the unit normal point ``e_d``; the exact inverse is
    :func:`phi_eps_inverse`.
    """
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X2 = np.atleast_2d(X)
    if X2.shape[1] != frame.dim:
        raise InvalidInputError(f"point dimension {X2.shape[1]} != frame dimension {frame.dim}")
    S = (X2 - frame.base[None, :]) @ frame.rotation.T / frame.epsilon
    return S[0] if single else S


def phi_eps_inverse(frame: BoundaryFrame, s) -> np.ndarray:
    """Exact inverse dilation ``Phi^{-1}(s) = P + eps * Q^T s``."""
    S = np.asarray(s, dtype=float)
    single = S.ndim == 1
    S2 = np.atleast_2d(S)
    if S2.shape[1] != frame.dim:
        raise InvalidInputError(f"point dimension {S2.shape[1]} != frame dimension {frame.dim}")
    X = frame.base[None, :] + frame.epsilon * (S2 @ frame.rotation)
    return X[0] if single else X


@dataclass(frozen=True)
class TransferredDefiningFunction:
    """The defining function seen through the frame dilation.

    Evaluates ``rho_eps(s) = rho(Phi^{-1}(s)) / (eps * |grad rho(P)|)``; the
    gradient normalization makes the linear term exactly ``-s_d``, so
    ``rho_eps(0) = 0``, ``grad rho_eps(0) = -e_d``, and ``rho_eps -> -s_d``
    as eps -> 0 at rate O(eps) for C^2 boundaries.
    """

    frame: BoundaryFrame
    domain: Domain
    gradient_scale: float

    @property
    def source_rho(self):
        """The untransformed defining function of the underlying domain."""
        return self.domain.rho

    def __call__(self, s) -> "float | np.ndarray":
        S = np.asarray(s, dtype=float)
        single = S.ndim == 1
        S2 = np.atleast_2d(S)
        X = phi_eps_inverse(self.frame, S2)
        vals = self.domain.rho_batch(X) / (self.frame.epsilon * self.gradient_scale)
        return float(vals[0]) if single else vals

    @property
    def gradient_at_zero(self) -> np.ndarray:
        """Exact chain-rule gradient at the origin, ``Q grad rho(P) / g = -e_d``."""
        g = self.domain.rho_grad(self.frame.base)
        return self.frame.rotation @ g / self.gradient_scale


def transfer_defining_function(frame: BoundaryFrame, domain: Domain) -> TransferredDefiningFunction:
    """Transfer the domain's defining function into frame coordinates."""
    base = as_point(frame.base, domain.dim, name="base")
    if abs(domain.rho(base)) > 1e-10:
        raise InvalidInputError("frame base point is not on the domain boundary")
    g = domain.rho_grad(base)
    gn = float(np.linalg.norm(g))
    if gn < 1e-12:
        raise InvalidInputError("degenerate gradient at the frame base point")
    return TransferredDefiningFunction(frame=frame, domain=domain, gradient_scale=gn)


@lru_cache(maxsize=32)
def _gap_grid(dim: int, radius: float) -> np.ndarray:
    """Deterministic low-discrepancy sample of the closed ball |s| <= radius.

    4096 points total: 3584 interior points from an unscrambled Halton
    sequence (inverse-Gaussian directions, radii ~ u^{1/d} for uniformity in
    volume) plus 512 points exactly on the bounding sphere, where
    curvature-dominated gaps attain their supremum.
    """
    inner = _GRID_SIZE - _GRID_SHELL
    halton = qmc.Halton(d=dim + 1, scramble=False)
    raw = halton.random(inner + 64)
    good = raw[np.all((raw > 0.0) & (raw < 1.0), axis=1)][:inner]
    dirs = ndtri(good[:, :dim])
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms < 1e-14] = 1.0
    dirs = dirs / norms[:, None]
    radii = radius * good[:, dim] ** (1.0 / dim)
    interior = dirs * radii[:, None]

    if dim == 2:
        angles = 2.0 * np.pi * np.arange(_GRID_SHELL) / _GRID_SHELL
        shell_dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        halton_s = qmc.Halton(d=dim, scramble=False)
        raw_s = halton_s.random(_GRID_SHELL + 64)
        good_s = raw_s[np.all((raw_s > 0.0) & (raw_s < 1.0), axis=1)][:_GRID_SHELL]
        shell_dirs = ndtri(good_s)
        ns = np.linalg.norm(shell_dirs, axis=1)
        ns[ns < 1e-14] = 1.0
        shell_dirs = shell_dirs / ns[:, None]
    shell = radius * shell_dirs
    grid = np.concatenate([interior, shell], axis=0)
    grid.setflags(write=False)
    return grid


def linearization_gap(tdf: TransferredDefiningFunction, radius: float) -> float:
    """Sup-norm distance of ``rho_eps`` from its flat limit ``-s_d``.

    Returns ``max |rho_eps(s) + s_d|`` over a fixed deterministic 4096-point
    low-discrepancy grid of the ball ``|s| <= radius`` (the reported value is
    the grid maximum, chosen for bit-reproducibility over randomized sup
    estimation).  Decays like O(eps) for C^2 boundaries and vanishes
    identically when the boundary is already flat.
    """
    radius = float(radius)
    if not radius > 0.0:
        raise InvalidInputError(f"radius must be positive, got {radius}")
    S = _gap_grid(tdf.frame.dim, radius)
    vals = tdf(S)
    return float(np.max(np.abs(vals + S[:, -1])))


def kernel_pullback(frame: BoundaryFrame, scaled_kernel: KernelEvaluator, x, tau) -> float:
    """Pull the dilated domain's kernel back to the original coordinates.

    Computes ``eps^{-(d-1)} * scaled_kernel(Phi(x), Phi(tau))``.  The factor
    is the Jacobian of the dilation restricted to the (d-1)-dimensional
    boundary, so when ``scaled_kernel`` is the exact Poisson kernel of the
    dilated domain the result equals the original domain's kernel exactly.
    """
    x = as_point(x, frame.dim, name="x")
    tau = as_point(tau, frame.dim, name="tau")
    s_x = phi_eps(frame, x)
    s_tau = phi_eps(frame, tau)
    return float(frame.epsilon ** (-(frame.dim - 1)) * scaled_kernel(s_x, s_tau))


def scaled_model_kernel(domain: Domain, frame: BoundaryFrame) -> KernelEvaluator:
    """Exact Poisson kernel of the dilated image of a model domain.

    The dilation maps a ball to a ball (center ``Phi(c)``, radius ``r/eps``)
    and the upper halfspace to itself, so both images keep closed-form
    kernels.
    """
    if isinstance(domain, Ball):
        center = phi_eps(frame, domain.center)
        return ball_kernel(center, domain.radius / frame.epsilon)
    if isinstance(domain, Halfspace):
        return halfspace_kernel(domain.dim)
    raise DomainUnsupportedError(
        f"the dilated image of a {type(domain).__name__} domain has no closed-form kernel"
    )


def halfspace_surrogate(frame: BoundaryFrame, x, tau) -> float:
    """Flat-boundary approximant to the kernel near the frame base.

    Evaluates the halfspace kernel in frame-centered (unscaled) coordinates
    ``x~ = Q (x - P)``, ``tau~ = Q (tau - P)``::

        c_d * x~_d / (|x~' - tau~'|^2 + x~_d^2)^{d/2}

    with the dimensional constant ``c_d = Gamma(d/2)/pi^{d/2}`` retained so
    the surrogate is exact on actual halfspaces.  Meaningful when ``x`` and
    ``tau`` lie within O(eps) of the base point, where the blown-up boundary
    is nearly flat; the tangential coordinate of ``tau~`` is used as the
    boundary coordinate (its small normal component is discarded).
    """
    x = as_point(x, frame.dim, name="x")
    tau = as_point(tau, frame.dim, name="tau")
    xt = frame.rotation @ (x - frame.base)
    tt = frame.rotation @ (tau - frame.base)
    height = float(xt[-1])
    if not height > 0.0:
        raise InvalidInputError("x is not on the inward side of the frame base")
    sq = float(np.sum((xt[:-1] - tt[:-1]) ** 2) + height * height)
    d = frame.dim
    return halfspace_constant(d) * height / sq ** (d / 2.0)
