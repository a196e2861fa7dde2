"""Boundary-asymptotic diagnostics for Poisson kernels.

The central quantity is the ratio ``P(x, y) |x - y|^d / delta(x)`` for
interior ``x`` and boundary ``y``: on smooth domains it is bounded above and
below by positive constants, so sweeping it along inward normals and over
boundary targets exhibits concrete empirical band constants ``c1 <= c2``.
Closed ratio laws on model domains (disc: ``(1 + |x|)/(2 pi)`` independent of
``y``; halfspace: identically ``Gamma(d/2)/pi^{d/2}``) make exact tests
possible; on other domains the kernel is estimated by walk-on-spheres.

The derivative analogue ``|D^k P(x, y)| |x - y|^{d+k} / delta(x)`` is exposed
as a direction-resolved *report*, not an assertion: exact halfspace algebra
shows the normal-direction ratio grows without bound when ``delta << |x - y|``
(it scales like ``|x - y| / delta``) while tangential ratios stay banded, so a
two-sided bound in every direction would be false and is not encoded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import Domain, as_point, rotation_to_last_axis

__all__ = [
    "RatioRecord",
    "SweepReport",
    "kernel_ratio",
    "normal_sweep",
    "directional_derivative",
    "derivative_ratio",
    "DerivativeRecord",
    "DerivativeReport",
    "derivative_report",
]

FAR_FIELD_SEPARATION_FACTOR = 10.0  # separation > factor * delta tags a record far-field


@dataclass(frozen=True)
class RatioRecord:
    """One sample of the boundary-asymptotic ratio.

    ``ratio = kernel * separation**d / delta`` by construction (an arithmetic
    identity on the stored fields).  ``far_field`` tags samples with
    ``separation > 10 * delta``, where the two-sided bound is trivially loose;
    ``std_error`` is the Monte Carlo standard error of ``ratio`` when the
    kernel value was estimated (0 for closed-form kernels).
    """

    x: tuple
    y: tuple
    delta: float
    separation: float
    kernel: float
    ratio: float
    far_field: bool = False
    std_error: float = 0.0


def kernel_ratio(domain: Domain, kernel, x, y) -> RatioRecord:
    """Evaluate the ratio ``P(x, y) |x - y|^d / delta(x)`` as a record.

    ``kernel`` is any evaluator ``(x, y) -> value``; evaluators exposing an
    ``estimate`` method returning a ``MeasureEstimate`` (such as the
    walk-on-spheres kernel) also populate the record's standard error.
    """
    x = as_point(x, domain.dim, name="x")
    y = as_point(y, domain.dim, name="y")
    delta = -domain.signed_distance(x)
    if not delta > 0.0:
        raise InvalidInputError("x must be strictly inside the domain")
    separation = float(np.linalg.norm(x - y))
    if separation == 0.0:
        raise InvalidInputError("x and y must be distinct")
    if hasattr(kernel, "estimate"):
        est = kernel.estimate(x, y)
        value = est.estimate
        se_ratio = est.std_error * separation**domain.dim / delta
    else:
        value = float(kernel(x, y))
        se_ratio = 0.0
    ratio = value * separation**domain.dim / delta
    return RatioRecord(
        x=tuple(x.tolist()),
        y=tuple(y.tolist()),
        delta=float(delta),
        separation=separation,
        kernel=float(value),
        ratio=float(ratio),
        far_field=bool(separation > FAR_FIELD_SEPARATION_FACTOR * delta),
        std_error=float(se_ratio),
    )


@dataclass(frozen=True)
class SweepReport:
    """Ratio records over a (delta, target) grid with empirical band constants.

    ``c1_hat``/``c2_hat`` are the observed minimum/maximum ratio over the
    grid -- never extrapolated -- so every record's ratio lies in
    ``[c1_hat, c2_hat]`` by construction.  Records are ordered delta-major
    (all targets for the first delta, then the next delta, ...).
    """

    records: tuple
    c1_hat: float
    c2_hat: float
    domain_descriptor: dict
    grid_descriptor: dict

    def to_csv_text(self) -> str:
        """Deterministic CSV body: delta, y_index, separation, kernel, ratio, far_field."""
        n_targets = max(1, len(self.grid_descriptor.get("targets", ())))
        lines = ["delta,y_index,separation,kernel,ratio,far_field"]
        for i, rec in enumerate(self.records):
            lines.append(
                f"{rec.delta!r},{i % n_targets},{rec.separation!r},"
                f"{rec.kernel!r},{rec.ratio!r},{int(rec.far_field)}"
            )
        return "\n".join(lines) + "\n"

    def to_json_summary(self, seed: int | None = None) -> dict:
        return {
            "c1_hat": self.c1_hat,
            "c2_hat": self.c2_hat,
            "grid": self.grid_descriptor,
            "domain": self.domain_descriptor,
            "seed": seed,
        }


def normal_sweep(domain: Domain, kernel, base, deltas, targets) -> SweepReport:
    """Sweep the ratio along the inward normal at ``base`` against ``targets``.

    For each ``delta`` the source point is ``x = base + delta * nu`` (``nu``
    the inward unit normal at ``base``); each boundary target contributes one
    :class:`RatioRecord`.  The report's ``c1_hat``/``c2_hat`` are the observed
    extremes over the whole grid, including far-field records.
    """
    base = as_point(base, domain.dim, name="base")
    if abs(domain.rho(base)) > 1e-10:
        raise InvalidInputError("sweep base point is not on the boundary")
    deltas = [float(d) for d in deltas]
    target_pts = [as_point(t, domain.dim, name="target") for t in targets]
    if not deltas:
        raise InvalidInputError("normal_sweep requires at least one delta")
    if not target_pts:
        raise InvalidInputError("normal_sweep requires at least one target")
    g = domain.rho_grad(base)
    gn = np.linalg.norm(g)
    if gn < 1e-12:
        raise InvalidInputError("degenerate gradient at the sweep base point")
    nu = -g / gn

    records = []
    for delta in deltas:
        x = base + delta * nu
        if not domain.contains(x):
            raise InvalidInputError(f"delta = {delta} leaves the domain from base {base.tolist()}")
        for y in target_pts:
            records.append(kernel_ratio(domain, kernel, x, y))
    ratios = [rec.ratio for rec in records]
    return SweepReport(
        records=tuple(records),
        c1_hat=float(min(ratios)),
        c2_hat=float(max(ratios)),
        domain_descriptor=domain.descriptor(),
        grid_descriptor={
            "base": base.tolist(),
            "deltas": deltas,
            "targets": [t.tolist() for t in target_pts],
            "far_field_rule": f"separation > {FAR_FIELD_SEPARATION_FACTOR:g} * delta",
        },
    )


def directional_derivative(kernel, x, y, order: int, direction, step: float) -> float:
    """Central finite-difference directional derivative of ``x -> kernel(x, y)``.

    Order 1 uses the two-point central difference, order 2 the three-point
    stencil.  ``direction`` is normalized internally; ``step`` is the absolute
    difference step along it.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(direction, dtype=float)
    un = np.linalg.norm(u)
    if un < 1e-300:
        raise InvalidInputError("direction must be a nonzero vector")
    u = u / un
    if not (step > 0.0 and math.isfinite(step)):
        raise InvalidInputError(f"difference step must be positive, got {step}")
    if order == 1:
        return float((kernel(x + step * u, y) - kernel(x - step * u, y)) / (2.0 * step))
    if order == 2:
        return float(
            (kernel(x + step * u, y) - 2.0 * kernel(x, y) + kernel(x - step * u, y)) / (step * step)
        )
    raise InvalidInputError(f"derivative order must be 1 or 2, got {order}")


def derivative_ratio(domain: Domain, kernel, x, y, order: int, direction) -> float:
    """Direction-resolved derivative ratio ``|D^k P| |x - y|^{d+k} / delta(x)``.

    ``kernel`` must be a closed-form evaluator (finite differences of Monte
    Carlo estimates are meaningless at these steps).  The difference step is
    ``max(1e-6, 1e-4 * delta(x))``; ``x`` must be at least 10 steps away from
    ``y`` so the stencil never straddles the singularity.
    """
    x = as_point(x, domain.dim, name="x")
    y = as_point(y, domain.dim, name="y")
    delta = -domain.signed_distance(x)
    if not delta > 0.0:
        raise InvalidInputError("x must be strictly inside the domain")
    step = max(1e-6, 1e-4 * delta)
    separation = float(np.linalg.norm(x - y))
    if separation < 10.0 * step:
        raise InvalidInputError(
            f"x is too close to y for the difference step ({separation:.3e} < 10 x {step:.3e})"
        )
    deriv = directional_derivative(kernel, x, y, order, direction, step)
    return abs(deriv) * separation ** (domain.dim + order) / delta


@dataclass(frozen=True)
class DerivativeRecord:
    """One direction-resolved derivative-ratio sample."""

    x: tuple
    y: tuple
    direction: tuple
    direction_label: str  # "tangential" or "normal"
    order: int
    derivative: float
    ratio: float
    delta: float
    separation: float


@dataclass(frozen=True)
class DerivativeReport:
    """Direction-resolved derivative diagnostic along a boundary tangent.

    ``normal_ratio_unbounded`` flags the regime the exact halfspace algebra
    predicts: the normal-direction ratio grows like ``separation / delta``
    once targets move tangentially away from the base, so it is set when the
    largest normal-direction order-1 ratio exceeds three times the
    smallest-separation one.  Tangential ratios stay banded and are reported
    for comparison; no two-sided bound is asserted.
    """

    records: tuple
    normal_ratio_unbounded: bool
    base: tuple
    probe_height: float

    def to_json_summary(self) -> dict:
        return {
            "base": list(self.base),
            "probe_height": self.probe_height,
            "normal_ratio_unbounded": self.normal_ratio_unbounded,
            "records": [
                {
                    "x": list(r.x),
                    "y": list(r.y),
                    "direction": list(r.direction),
                    "direction_label": r.direction_label,
                    "order": r.order,
                    "derivative": r.derivative,
                    "ratio": r.ratio,
                    "delta": r.delta,
                    "separation": r.separation,
                }
                for r in self.records
            ],
        }


def derivative_report(
    domain: Domain,
    kernel,
    base,
    probe_height: float,
    tangential_offsets,
    orders=(1,),
) -> DerivativeReport:
    """Build the direction-resolved derivative diagnostic at one boundary point.

    The probe point is ``x = base + h * nu`` with ``h = probe_height``;
    targets are the boundary projections of ``base + offset * tangent`` for
    each tangential offset (exact boundary points on flat boundaries).  For
    every target, each tangent direction and the normal direction contribute
    one record per requested order.
    """
    base = as_point(base, domain.dim, name="base")
    if abs(domain.rho(base)) > 1e-10:
        raise InvalidInputError("base point is not on the boundary")
    h = float(probe_height)
    if not h > 0.0:
        raise InvalidInputError(f"probe height must be positive, got {probe_height}")
    g = domain.rho_grad(base)
    gn = np.linalg.norm(g)
    if gn < 1e-12:
        raise InvalidInputError("degenerate gradient at the base point")
    nu = -g / gn
    x = base + h * nu
    if not domain.contains(x):
        raise InvalidInputError(f"probe height {h} leaves the domain")
    Q = rotation_to_last_axis(nu)
    tangents = [Q[i] for i in range(domain.dim - 1)]

    offsets = [float(t) for t in tangential_offsets]
    if not offsets:
        raise InvalidInputError("at least one tangential offset is required")
    records = []
    for offset in offsets:
        y_raw = base + offset * tangents[0]
        if abs(domain.rho(y_raw)) <= 1e-10:
            y = y_raw
        else:
            y, _ = domain.project_to_boundary(y_raw)
        directions = [(t, "tangential") for t in tangents] + [(nu, "normal")]
        for direction, label in directions:
            for order in orders:
                deriv = directional_derivative(
                    kernel, x, y, order, direction, step=max(1e-6, 1e-4 * h)
                )
                delta = -domain.signed_distance(x)
                separation = float(np.linalg.norm(x - y))
                ratio = abs(deriv) * separation ** (domain.dim + order) / delta
                records.append(
                    DerivativeRecord(
                        x=tuple(x.tolist()),
                        y=tuple(y.tolist()),
                        direction=tuple(np.asarray(direction).tolist()),
                        direction_label=label,
                        order=int(order),
                        derivative=float(deriv),
                        ratio=float(ratio),
                        delta=float(delta),
                        separation=separation,
                    )
                )

    normal_first = [
        r for r in records if r.direction_label == "normal" and r.order == min(orders)
    ]
    flag = False
    if len(normal_first) >= 2:
        by_sep = sorted(normal_first, key=lambda r: r.separation)
        nearest = by_sep[0].ratio
        largest = max(r.ratio for r in normal_first)
        flag = largest > 3.0 * nearest if nearest > 0.0 else largest > 0.0
    return DerivativeReport(
        records=tuple(records),
        normal_ratio_unbounded=flag,
        base=tuple(base.tolist()),
        probe_height=h,
    )
