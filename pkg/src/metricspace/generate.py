"""Reproducible random instances: fields, densities, admissible paths.

Charts depend only on (points, n) so that separately generated files
share a chart; everything else is drawn from a seed-keyed generator, so
identical arguments give identical bytes. SPD values are built from a
random symmetric matrix by remapping its eigenvalues log-uniformly into
[1/spread, spread] (spread = 1 collapses to the identity).
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .errors import StructuralError
from .field_geometry import DiscretePath, MetricField, QuadChart, TangentField
from .product_structure import VolumeDensity, induced_density, product_path


def _rng(*key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(key)))


def gen_chart(points: int, n: int) -> QuadChart:
    """Chart with ids p000.. and weights drawn from (points, n) alone."""
    if points < 1:
        raise StructuralError("need at least one chart point")
    rng = _rng(0x43A8, points, n)
    ids = tuple(f"p{i:03d}" for i in range(points))
    weights = rng.uniform(0.5, 1.5, size=points) / points
    return QuadChart(n=n, ids=ids, weights=weights)


def random_spd_stack(rng: np.random.Generator, count: int, n: int, spread: float) -> np.ndarray:
    if spread < 1.0:
        raise StructuralError("spread must be >= 1")
    if spread == 1.0:
        return np.broadcast_to(np.eye(n), (count, n, n)).copy()
    a = rng.standard_normal((count, n, n))
    q = np.linalg.eigh(a + np.swapaxes(a, -1, -2))[1]
    lam = np.exp(rng.uniform(-np.log(spread), np.log(spread), size=(count, n)))
    return K.symmetrize(np.einsum("pik,pk,pjk->pij", q, lam, q))


def random_sym_stack(rng: np.random.Generator, count: int, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((count, n, n))
    return scale * 0.5 * (a + np.swapaxes(a, -1, -2))


def gen_metric_field(points: int, n: int, seed: int, spread: float = 3.0) -> MetricField:
    chart = gen_chart(points, n)
    rng = _rng(0x11D7, seed, points, n)
    return MetricField(chart, random_spd_stack(rng, points, n, spread))


def gen_tangent_field(points: int, n: int, seed: int, scale: float = 1.0) -> TangentField:
    chart = gen_chart(points, n)
    rng = _rng(0x7A4E, seed, points, n)
    return TangentField(chart, random_sym_stack(rng, points, n, scale))


def gen_density(points: int, n: int, seed: int, spread: float = 3.0) -> VolumeDensity:
    chart = gen_chart(points, n)
    rng = _rng(0xDE45, seed, points, n)
    if spread == 1.0:
        values = np.ones(points)
    else:
        values = np.exp(rng.uniform(-np.log(spread), np.log(spread), size=points))
    return VolumeDensity(chart, values)


def gen_path(
    points: int,
    n: int,
    seed: int,
    spread: float = 3.0,
    segments: int = 32,
    bump: float = 0.25,
) -> DiscretePath:
    """Smooth admissible path between two random fields.

    Starts from the product-structure initializer between random
    endpoints and multiplies in a sine bump through the cone
    exponential, so frames stay SPD and endpoints are exact.
    """
    chart = gen_chart(points, n)
    rng = _rng(0x9A7B, seed, points, n, segments)
    g0 = MetricField(chart, random_spd_stack(rng, points, n, spread))
    g1 = MetricField(chart, random_spd_stack(rng, points, n, spread))
    base = product_path(g0, g1, induced_density(g0), segments)
    direction = random_sym_stack(rng, points, n, bump)
    ts = np.linspace(0.0, 1.0, segments + 1)
    profile = np.sin(np.pi * ts)
    frames = np.empty_like(base.frames)
    frames[0], frames[-1] = base.frames[0], base.frames[-1]
    for k in range(1, segments):
        frames[k] = K.spd_exp(base.frames[k], profile[k] * direction)
    return DiscretePath._wrap(chart, frames)
