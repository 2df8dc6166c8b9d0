"""Volume/shape splitting of the space of metric fields.

A metric field factors into its induced volume density and a
unit-volume shape factor. Both factors carry closed-form exponential
maps: densities move along squared-affine rays, shape factors along
cone exponentials with traceless velocity (which preserves the induced
volume pointwise). The splitting map and its inverse are exact algebra,
so round trips hold to rounding error.

Volume forms are stored as positive coordinate densities against the
chart, which turns the coordinate-free density ratio into pointwise
division.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import BoundaryError, DomainError, PreconditionError, StructuralError
from .field_geometry import (
    DiscretePath,
    MetricField,
    QuadChart,
    TangentField,
    check_same_chart,
)
from .summation import pairwise_sum, segment_sum, tree_sum

# preconditions "this field induces that density" are checked at this
# relative tolerance; inputs normally come from split(), exact to round-off
INDUCES_RTOL = 1e-8
TRACELESS_TOL = 1e-10


@dataclass(frozen=True)
class VolumeDensity:
    """Positive per-point coordinate density: the form is value * dx."""

    chart: QuadChart
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != (self.chart.size,):
            raise StructuralError(
                f"density needs shape ({self.chart.size},), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)) or not np.all(arr > 0):
            bad = int(np.flatnonzero(~(arr > 0))[0])
            raise DomainError(
                f"density must be positive; point {self.chart.ids[bad]!r} is not"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class DensityTangent:
    """Per-point real perturbation of a volume density; sign-free."""

    chart: QuadChart
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != (self.chart.size,):
            raise StructuralError(
                f"density tangent needs shape ({self.chart.size},), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise StructuralError("density tangent entries must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def zero(cls, chart: QuadChart) -> "DensityTangent":
        return cls(chart, np.zeros(chart.size))


def induced_density(g: MetricField) -> VolumeDensity:
    """Coordinate density sqrt(det g) of the volume form of g."""
    return VolumeDensity(g.chart, K.sqrt_det(g.values))


def vol_inner(nu: VolumeDensity, alpha: DensityTangent, beta: DensityTangent) -> float:
    """(4/n) * sum_i w_i (alpha_i/nu_i)(beta_i/nu_i) nu_i."""
    chart = check_same_chart(nu, alpha, beta)
    terms = chart.weights * (alpha.values / nu.values) * (beta.values / nu.values) * nu.values
    return 4.0 / chart.n * tree_sum(terms)


def vol_exp(nu0: VolumeDensity, alpha: DensityTangent, t: float) -> VolumeDensity:
    """Density geodesic nu_t = (1 + (t/2)(alpha/nu0))^2 nu0.

    The squared formula is defined past the boundary but no longer
    parametrizes a geodesic there, so a nonpositive factor is a strict
    error rather than a clamp.
    """
    chart = check_same_chart(nu0, alpha)
    factor = 1.0 + 0.5 * t * (alpha.values / nu0.values)
    if not np.all(factor > 0):
        bad = int(np.flatnonzero(~(factor > 0))[0])
        raise BoundaryError(
            f"density geodesic left the positive cone at point {chart.ids[bad]!r} (t={t})",
            point_id=chart.ids[bad],
        )
    return VolumeDensity(chart, factor * factor * nu0.values)


def vol_log(nu0: VolumeDensity, nu1: VolumeDensity) -> DensityTangent:
    """Inverse of vol_exp at t=1: alpha = 2 (sqrt(nu1/nu0) - 1) nu0."""
    chart = check_same_chart(nu0, nu1)
    return DensityTangent(chart, 2.0 * (np.sqrt(nu1.values / nu0.values) - 1.0) * nu0.values)


def _check_traceless(g0: MetricField, h: TangentField) -> None:
    tr = K.trace_quotient(g0.values, h.values)
    scale = np.maximum(1.0, np.sqrt(np.maximum(K.trace_pair(g0.values, h.values, h.values), 0.0)))
    rel = np.abs(tr) / scale
    worst = int(np.argmax(rel))
    if rel[worst] > TRACELESS_TOL:
        raise PreconditionError(
            f"tangent is not traceless: tr at point {g0.chart.ids[worst]!r} "
            f"is {tr[worst]:.3g}",
            point_id=g0.chart.ids[worst],
        )


def mu_exp(g0: MetricField, h: TangentField, t: float) -> MetricField:
    """Volume-preserving geodesic: pointwise cone exponential of t*h.

    Requires tr_{g0} h = 0 at every point; then sqrt(det) is constant
    along the path, so the induced volume form never moves.
    """
    check_same_chart(g0, h)
    _check_traceless(g0, h)
    return MetricField._wrap(g0.chart, K.spd_exp(g0.values, t * h.values))


def mu_exp_path(g0: MetricField, h: TangentField, ts: np.ndarray) -> DiscretePath:
    """Frames of mu_exp(g0, h, t) for each t, sharing decompositions."""
    check_same_chart(g0, h)
    _check_traceless(g0, h)
    frames = K.spd_exp_family(g0.values, h.values, np.asarray(ts, dtype=float))
    return DiscretePath._wrap(g0.chart, frames)


def mu_log(g0: MetricField, g1: MetricField) -> TangentField:
    """Inverse of mu_exp at t=1; endpoints must induce the same volume."""
    chart = check_same_chart(g0, g1)
    d0, d1 = K.sqrt_det(g0.values), K.sqrt_det(g1.values)
    rel = np.abs(d1 - d0) / np.maximum(d0, 1e-300)
    worst = int(np.argmax(rel))
    if rel[worst] > INDUCES_RTOL:
        raise PreconditionError(
            f"endpoints induce different volumes at point {chart.ids[worst]!r}: "
            f"{d0[worst]:.12g} vs {d1[worst]:.12g}",
            point_id=chart.ids[worst],
        )
    return TangentField(chart, K.spd_log(g0.values, g1.values))


def _check_induces(gbar: MetricField, mu: VolumeDensity) -> None:
    dens = K.sqrt_det(gbar.values)
    rel = np.abs(dens - mu.values) / np.maximum(mu.values, 1e-300)
    worst = int(np.argmax(rel))
    if rel[worst] > INDUCES_RTOL:
        raise PreconditionError(
            f"field does not induce the base density at point "
            f"{gbar.chart.ids[worst]!r}: sqrt(det) {dens[worst]:.12g} vs {mu.values[worst]:.12g}",
            point_id=gbar.chart.ids[worst],
        )


def i_mu(mu: VolumeDensity, nu: VolumeDensity, gbar: MetricField) -> MetricField:
    """Assemble a metric field from (density, shape): (nu/mu)^{2/n} gbar.

    gbar must induce mu; the result then induces nu exactly.
    """
    chart = check_same_chart(mu, nu, gbar)
    _check_induces(gbar, mu)
    factor = (nu.values / mu.values) ** (2.0 / chart.n)
    return MetricField._wrap(chart, factor[:, None, None] * gbar.values)


def split(mu: VolumeDensity, g: MetricField) -> tuple[VolumeDensity, MetricField]:
    """Inverse of i_mu: (induced density of g, shape factor inducing mu)."""
    chart = check_same_chart(mu, g)
    nu = induced_density(g)
    factor = (nu.values / mu.values) ** (-2.0 / chart.n)
    gbar = MetricField._wrap(chart, factor[:, None, None] * g.values)
    return nu, gbar


def product_path(
    g0: MetricField, g1: MetricField, mu: VolumeDensity, segments: int
) -> DiscretePath:
    """Path combining the two closed-form factor geodesics.

    Splits both endpoints against mu, runs the density and shape
    geodesics side by side, and reassembles through i_mu. Endpoints
    reproduce g0 and g1 to rounding; the result is an initializer, not
    a claimed geodesic of the full space.
    """
    chart = check_same_chart(g0, g1, mu)
    if segments < 1:
        raise StructuralError("need at least one segment")
    nu0, gbar0 = split(mu, g0)
    nu1, gbar1 = split(mu, g1)
    alpha = vol_log(nu0, nu1)
    h = mu_log(gbar0, gbar1)
    ts = np.linspace(0.0, 1.0, segments + 1)
    shape_frames = K.spd_exp_family(gbar0.values, h.values, ts)
    frames = np.empty_like(shape_frames)
    for k, t in enumerate(ts):
        nu_t = vol_exp(nu0, alpha, float(t))
        factor = (nu_t.values / mu.values) ** (2.0 / chart.n)
        frames[k] = factor[:, None, None] * shape_frames[k]
    return DiscretePath._wrap(chart, frames)


def density_path_length(nu_frames: list[VolumeDensity] | tuple[VolumeDensity, ...]) -> float:
    """Discrete length of a density path under the (4/n)-weighted metric.

    Midpoint rule, mirror of the field path length: sum_k of
    sqrt(vol_inner at the midpoint density of the frame difference).
    """
    chart = check_same_chart(*nu_frames)
    stack = np.stack([f.values for f in nu_frames])
    mids = 0.5 * (stack[:-1] + stack[1:])
    deltas = stack[1:] - stack[:-1]
    terms = chart.weights * (deltas / mids) ** 2 * mids
    sq = 4.0 / chart.n * np.maximum(pairwise_sum(terms, axis=-1), 0.0)
    return segment_sum(np.sqrt(sq))


def vol_exp_path(nu0: VolumeDensity, alpha: DensityTangent, ts) -> list[VolumeDensity]:
    """Density geodesic sampled at each t."""
    return [vol_exp(nu0, alpha, float(t)) for t in np.asarray(ts, dtype=float)]
