"""Walk-on-spheres Monte Carlo estimation of harmonic measure and
Poisson-kernel density on C^2 domains.

A walk started at an interior point jumps to a uniformly random point on the
largest ball around its current position that stays inside the domain (radius
= boundary distance), and stops once it comes within ``stop_tolerance`` of the
boundary, where it is projected onto the nearest boundary point.  The exit
point is then distributed (up to a boundary-layer bias of order
``stop_tolerance``) according to harmonic measure, whose density against
surface measure is the Poisson kernel -- giving a numerical kernel oracle on
domains with no closed form.

Randomness is counter-based (see :mod:`poisskern._rng`): walker ``w`` of a run
with seed ``s`` draws from its own stream regardless of batching, so estimates
are bit-identical across batch sizes and scheduling orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .errors import (
    DomainUnsupportedError,
    EstimationFailureError,
    InvalidInputError,
    WalkTruncatedError,
)
from .geometry import Ball, Domain, Ellipse, Halfspace, as_point
from .model_kernels import gamma

__all__ = [
    "WosConfig",
    "MeasureEstimate",
    "run_walks",
    "wos_exit",
    "estimate_cap_measure",
    "estimate_kernel_density",
    "cap_surface_measure",
    "WosKernel",
]

_SEED_LIMIT = 1 << 64
_IMPLICIT_SAFETY = 0.99  # shrink solver-derived jump radii to absorb tolerance


@dataclass(frozen=True)
class WosConfig:
    """Monte Carlo controls for walk-on-spheres runs.

    ``stop_tolerance`` is the boundary distance at which a walk terminates
    (default: 1e-4 times the domain diameter, or the truncation radius for
    unbounded domains).  ``seed`` is a 64-bit unsigned integer; together with
    the walker index it determines every walk exactly.  Walks exceeding
    ``max_steps`` or leaving the truncation region are counted as truncated;
    if more than ``truncation_failure_fraction`` of walks truncate, estimation
    fails rather than returning a biased value.
    """

    walkers: int
    seed: int
    stop_tolerance: float | None = None
    max_steps: int = 10_000
    truncation_failure_fraction: float = 0.5

    def __post_init__(self):
        if not (isinstance(self.walkers, int) and self.walkers >= 1):
            raise InvalidInputError(f"walkers must be an integer >= 1, got {self.walkers}")
        if not (isinstance(self.seed, int) and 0 <= self.seed < _SEED_LIMIT):
            raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.stop_tolerance is not None and not (
            isinstance(self.stop_tolerance, (int, float)) and self.stop_tolerance > 0.0
        ):
            raise InvalidInputError(f"stop_tolerance must be positive, got {self.stop_tolerance}")
        if not (isinstance(self.max_steps, int) and self.max_steps >= 1):
            raise InvalidInputError(f"max_steps must be an integer >= 1, got {self.max_steps}")
        if not 0.0 < self.truncation_failure_fraction <= 1.0:
            raise InvalidInputError("truncation_failure_fraction must lie in (0, 1]")


@dataclass(frozen=True)
class MeasureEstimate:
    """A Monte Carlo estimate with its sampling standard error.

    ``estimate`` is a probability for cap measures and a nonnegative density
    for kernel estimates.  ``wide_interval`` marks zero-hit density estimates,
    whose ``std_error`` is then a rule-of-three upper bound rather than an
    empirical standard error.
    """

    estimate: float
    std_error: float
    walkers_used: int
    truncated_walks: int
    wide_interval: bool = False


def _resolve_stop(domain: Domain, config: WosConfig, truncation_radius: float | None) -> float:
    if config.stop_tolerance is not None:
        stop = float(config.stop_tolerance)
    else:
        if domain.bounded():
            scale = domain.diameter()
        elif truncation_radius is not None:
            scale = float(truncation_radius)
        else:
            raise InvalidInputError(
                "unbounded domain: supply a truncation_radius (stop tolerance defaults to 1e-4 x scale)"
            )
        stop = 1e-4 * scale
    if domain.bounded() and not stop < domain.diameter():
        raise InvalidInputError(
            f"stop_tolerance {stop} must be smaller than the domain diameter {domain.diameter()}"
        )
    return stop


def run_walks(
    domain: Domain,
    x,
    config: WosConfig,
    truncation_radius: float | None = None,
    walker_indices=None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run walk-on-spheres walkers from ``x`` until exit or truncation.

    Returns ``(feet, truncated, steps)``: projected boundary exit points (rows
    of truncated walks hold the last interior position instead and must be
    ignored), a truncation mask (step budget exhausted or left the truncation
    ball ``|pos| > truncation_radius``), and per-walk step counts.

    ``walker_indices`` selects which counter-based streams to run (default
    ``0 .. walkers-1``); running any subset reproduces exactly the walks the
    full batch would produce for those indices.
    """
    x = as_point(x, domain.dim, name="x")
    if not domain.contains(x):
        raise InvalidInputError(f"walk origin {x.tolist()} is not strictly inside the domain")
    if not domain.bounded() and truncation_radius is None:
        raise InvalidInputError("unbounded domain: a truncation_radius is required")
    stop = _resolve_stop(domain, config, truncation_radius)
    if walker_indices is None:
        walker_indices = np.arange(config.walkers)
    indices = np.asarray(walker_indices, dtype=np.int64)
    n = indices.size
    dim = domain.dim
    draws = _rng.draws_per_step(dim)
    keys = _rng.stream_keys(config.seed, indices)

    pos = np.tile(x, (n, 1))
    final = np.empty((n, dim))
    truncated = np.zeros(n, dtype=bool)
    steps = np.zeros(n, dtype=np.int64)
    active = np.arange(n)

    safety = 1.0 if domain.exact_distance else _IMPLICIT_SAFETY
    for it in range(config.max_steps):
        if active.size == 0:
            break
        delta = -domain.signed_distance_batch(pos)
        delta = np.maximum(delta, 0.0) * safety

        done = delta < stop
        if np.any(done):
            idx = active[done]
            final[idx] = pos[done]
            steps[idx] = it
            active = active[~done]
            pos = pos[~done]
            delta = delta[~done]
            if active.size == 0:
                break

        if truncation_radius is not None:
            out = np.linalg.norm(pos, axis=1) > truncation_radius
            if np.any(out):
                idx = active[out]
                final[idx] = pos[out]
                truncated[idx] = True
                steps[idx] = it
                active = active[~out]
                pos = pos[~out]
                delta = delta[~out]
                if active.size == 0:
                    break

        directions = _rng.sphere_directions(keys[active], it * draws, dim)
        pos = pos + delta[:, None] * directions

    if active.size:  # step budget exhausted
        final[active] = pos
        truncated[active] = True
        steps[active] = config.max_steps

    feet = final.copy()
    settled = ~truncated
    if np.any(settled):
        feet[settled], _ = domain.project_batch(final[settled])
    return feet, truncated, steps


def wos_exit(domain: Domain, x, config: WosConfig, walker_index: int) -> np.ndarray:
    """Exit point of the single walk with the given counter-stream index.

    Deterministic given ``(config.seed, walker_index)`` and identical to row
    ``walker_index`` of a batched run.  Raises :class:`WalkTruncatedError` if
    this walk exhausts its step budget (use the estimators to count truncated
    walks instead of failing).
    """
    feet, truncated, _ = run_walks(domain, x, config, walker_indices=[int(walker_index)])
    if truncated[0]:
        raise WalkTruncatedError(
            f"walk {walker_index} exceeded {config.max_steps} steps without exiting"
        )
    return feet[0]


def _validate_cap(domain: Domain, cap_center, cap_radius: float) -> tuple[np.ndarray, float]:
    center = as_point(cap_center, domain.dim, name="cap_center")
    if abs(domain.rho(center)) > 1e-8:
        raise InvalidInputError(
            f"cap center is not on the boundary (rho = {domain.rho(center):.3e})"
        )
    radius = float(cap_radius)
    if not (radius > 0.0 and math.isfinite(radius)):
        raise InvalidInputError(f"cap_radius must be positive and finite, got {cap_radius}")
    return center, radius


def _cap_estimate_from_feet(
    feet: np.ndarray,
    truncated: np.ndarray,
    center: np.ndarray,
    radius: float,
    config: WosConfig,
) -> MeasureEstimate:
    n = feet.shape[0]
    n_trunc = int(truncated.sum())
    if n_trunc / n > config.truncation_failure_fraction:
        raise EstimationFailureError(
            f"{n_trunc} of {n} walks truncated (limit {config.truncation_failure_fraction:.0%})"
        )
    hits = (~truncated) & (np.linalg.norm(feet - center[None, :], axis=1) < radius)
    p = float(hits.sum()) / n
    se = math.sqrt(p * (1.0 - p) / n)
    return MeasureEstimate(estimate=p, std_error=se, walkers_used=n, truncated_walks=n_trunc)


def estimate_cap_measure(
    domain: Domain,
    x,
    cap_center,
    cap_radius: float,
    config: WosConfig,
    truncation_radius: float | None = None,
) -> MeasureEstimate:
    """Harmonic measure of the chordal boundary cap ``{|tau - center| < radius}``.

    The estimate is the fraction of all walks exiting inside the cap
    (truncated walks never count as hits), with binomial standard error.  It
    is unbiased up to a boundary-layer bias of order ``stop_tolerance``.
    """
    center, radius = _validate_cap(domain, cap_center, cap_radius)
    feet, truncated, _ = run_walks(domain, x, config, truncation_radius=truncation_radius)
    return _cap_estimate_from_feet(feet, truncated, center, radius, config)


def cap_surface_measure(domain: Domain, cap_center, cap_radius: float) -> float:
    """Surface measure of the chordal cap ``{tau on boundary : |tau - center| < radius}``.

    Closed forms: circle arc ``4 r asin(c / 2r)``, sphere cap ``pi c^2``
    (exact for chordal caps), halfspace boundary ball (length ``2c`` in d=2,
    area ``pi c^2`` in d=3, and the general (d-1)-ball volume above).  Ellipse
    caps bracket the two arc endpoints and integrate the arc-length element
    (Brent root-finding plus Gauss-Legendre); the cap radius must stay below
    the minimum radius of curvature so the cap is a single arc.
    """
    center, c = _validate_cap(domain, cap_center, cap_radius)
    if isinstance(domain, Ball):
        r = domain.radius
        if domain.dim == 2:
            return 4.0 * r * math.asin(min(c / (2.0 * r), 1.0))
        if domain.dim == 3:
            return min(math.pi * c * c, 4.0 * math.pi * r * r)
        raise DomainUnsupportedError(
            f"cap measure on spheres is implemented for d in {{2, 3}}, got d = {domain.dim}"
        )
    if isinstance(domain, Halfspace):
        d = domain.dim
        k = d - 1  # boundary dimension
        return math.pi ** (k / 2.0) * c**k / gamma(k / 2.0 + 1.0)
    if isinstance(domain, Ellipse):
        return _ellipse_cap_arc_length(domain, center, c)
    raise DomainUnsupportedError(
        f"cap surface measure is not available for {type(domain).__name__} domains"
    )


def _ellipse_cap_arc_length(domain: Ellipse, center: np.ndarray, c: float) -> float:
    from scipy.optimize import brentq

    if c >= domain.min_curvature_radius():
        raise InvalidInputError(
            f"cap radius {c} is not small relative to the minimum curvature radius "
            f"{domain.min_curvature_radius():.6g}"
        )
    a, b = domain.semi_axes
    theta0 = math.atan2(center[1] / b, center[0] / a)

    def h(theta: float) -> float:
        p = domain.boundary_point(theta)
        return float(np.sum((p - center) ** 2)) - c * c

    # Bracket the two endpoints by marching outward from the center parameter.
    step = c / (2.0 * max(a, b))
    ends = []
    for sign in (+1.0, -1.0):
        prev = 0.0
        cur = step
        while h(theta0 + sign * cur) < 0.0:
            prev = cur
            cur += step
            if cur > math.pi:
                raise InvalidInputError("cap covers more than half the boundary")
        ends.append(brentq(lambda u: h(theta0 + sign * u), prev, cur, xtol=1e-15, rtol=8.9e-16))
    lo, hi = theta0 - ends[1], theta0 + ends[0]
    nodes, weights = np.polynomial.legendre.leggauss(64)
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return float(half * np.sum(weights * domain.boundary_speed(mid + half * nodes)))


def _density_from_cap(cap: MeasureEstimate, area: float) -> MeasureEstimate:
    if cap.estimate == 0.0:
        # Rule-of-three upper bound stands in for the standard error.
        return MeasureEstimate(
            estimate=0.0,
            std_error=(3.0 / cap.walkers_used) / area,
            walkers_used=cap.walkers_used,
            truncated_walks=cap.truncated_walks,
            wide_interval=True,
        )
    return MeasureEstimate(
        estimate=cap.estimate / area,
        std_error=cap.std_error / area,
        walkers_used=cap.walkers_used,
        truncated_walks=cap.truncated_walks,
    )


def estimate_kernel_density(
    domain: Domain,
    x,
    y,
    cap_radius: float,
    config: WosConfig,
    truncation_radius: float | None = None,
) -> MeasureEstimate:
    """Poisson-kernel density estimate: cap measure divided by cap area.

    Converges to the kernel value ``P(x, y)`` as ``cap_radius -> 0`` and
    walkers -> infinity, with bias O(cap_radius^2) for smooth kernels plus the
    O(stop_tolerance) boundary layer.  Zero-hit results return estimate 0
    flagged ``wide_interval`` with a rule-of-three interval scale.
    """
    area = cap_surface_measure(domain, y, cap_radius)
    cap = estimate_cap_measure(domain, x, y, cap_radius, config, truncation_radius=truncation_radius)
    return _density_from_cap(cap, area)


class WosKernel:
    """Kernel evaluator backed by cached walk exits.

    All targets queried against the same source point ``x`` reuse one batch of
    walker paths (the per-``x`` exits are computed once and cached), so a
    ratio sweep over many boundary targets costs one Monte Carlo run per
    source point.  Estimates sharing an ``x`` are therefore correlated across
    targets; estimates for different ``x`` are independent.

    Calling the object returns the density estimate as a float;
    :meth:`estimate` returns the full :class:`MeasureEstimate`.
    """

    def __init__(
        self,
        domain: Domain,
        config: WosConfig,
        cap_radius: float,
        truncation_radius: float | None = None,
    ):
        self.domain = domain
        self.config = config
        self.cap_radius = float(cap_radius)
        if not (self.cap_radius > 0.0 and math.isfinite(self.cap_radius)):
            raise InvalidInputError(f"cap_radius must be positive and finite, got {cap_radius}")
        self.truncation_radius = truncation_radius
        self._cache: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}

    def _exits(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        key = x.tobytes()
        if key not in self._cache:
            feet, truncated, _ = run_walks(
                self.domain, x, self.config, truncation_radius=self.truncation_radius
            )
            self._cache[key] = (feet, truncated)
        return self._cache[key]

    def estimate(self, x, y) -> MeasureEstimate:
        x = as_point(x, self.domain.dim, name="x")
        center, radius = _validate_cap(self.domain, y, self.cap_radius)
        area = cap_surface_measure(self.domain, center, radius)
        feet, truncated = self._exits(x)
        cap = _cap_estimate_from_feet(feet, truncated, center, radius, self.config)
        return _density_from_cap(cap, area)

    def __call__(self, x, y) -> float:
        return self.estimate(x, y).estimate

    def descriptor(self) -> dict:
        return {
            "kind": "walk_on_spheres",
            "walkers": self.config.walkers,
            "seed": self.config.seed,
            "stop_tolerance": self.config.stop_tolerance,
            "max_steps": self.config.max_steps,
            "cap_radius": self.cap_radius,
            "truncation_radius": self.truncation_radius,
        }
