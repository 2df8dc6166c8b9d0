"""The SPD cone at a single base point and its two metric structures.

The plain trace metric <h, k> = tr_g(h k) lives on the cone of metrics
at a point. Weighting it by det(g_ref^{-1} g) gives the second
structure used for integrated distances; its geodesic distance has no
closed form here, so it is computed as an optimizer upper bound over
discrete paths. Conformal segments t -> f(t) g0 do have a closed-form
length, which serves as the test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DomainError, StructuralError
from .path_optimizer import (
    OptimizerOptions,
    PointConeSetting,
    discrete_length,
    minimize,
)
from .summation import segment_sum
from .tensor_core import SpdMatrix, SymMatrix, trace_pair


@dataclass(frozen=True)
class PointPath:
    """K+1 SPD samples on the uniform grid t_k = k/K at one base point."""

    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 3 or arr.shape[0] < 2 or arr.shape[1] != arr.shape[2]:
            raise StructuralError("point path needs >= 2 square samples")
        if not np.array_equal(arr, np.swapaxes(arr, -1, -2)):
            arr = K.symmetrize(arr)
        if not np.all(K.spd_margin(arr) > 0.0):
            k = int(np.flatnonzero(~(K.spd_margin(arr) > 0.0))[0])
            raise DomainError(f"path sample {k} is not SPD within the floor")
        arr = np.array(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @classmethod
    def from_matrices(cls, mats) -> "PointPath":
        return cls(np.stack([m.mat for m in mats]))

    @property
    def segments(self) -> int:
        return self.samples.shape[0] - 1

    @property
    def n(self) -> int:
        return self.samples.shape[-1]

    def sample(self, k: int) -> SpdMatrix:
        return SpdMatrix(self.samples[k])

    def reverse(self) -> "PointPath":
        return PointPath(self.samples[::-1])


def inner_point(g: SpdMatrix, h: SymMatrix, k: SymMatrix) -> float:
    """Trace metric on the cone: tr_g(h k)."""
    return trace_pair(g, h, k)


def inner0_point(g_ref: SpdMatrix, g: SpdMatrix, h: SymMatrix, k: SymMatrix) -> float:
    """Determinant-weighted trace metric: tr_g(h k) * det(g_ref^{-1} g)."""
    if g_ref.n != g.n:
        raise StructuralError(f"dimension mismatch: {g_ref.n} != {g.n}")
    weight = float(np.linalg.det(g.mat) / np.linalg.det(g_ref.mat))
    return trace_pair(g, h, k) * weight


def point_path_length(g_ref: SpdMatrix, path: PointPath) -> float:
    """Discrete length of a cone path under the weighted metric.

    Midpoint evaluation: sum_k sqrt(<d_k, d_k>^0 at (s_k + s_{k+1})/2),
    symmetric under reversal; zero exactly for a constant path.
    """
    if g_ref.n != path.n:
        raise StructuralError(f"dimension mismatch: {g_ref.n} != {path.n}")
    mids = 0.5 * (path.samples[:-1] + path.samples[1:])
    if not np.all(K.spd_margin(mids) > 0.0):
        raise DomainError("a segment midpoint left the SPD cone")
    deltas = path.samples[1:] - path.samples[:-1]
    det_ref = float(np.linalg.det(g_ref.mat))
    terms = np.maximum(K.cone_seg_terms(mids, deltas, det_ref), 0.0)
    return segment_sum(np.sqrt(terms))


def theta_distance(
    g_ref: SpdMatrix,
    a: SpdMatrix,
    b: SpdMatrix,
    opts: OptimizerOptions | None = None,
) -> tuple[float, PointPath]:
    """Upper bound for the weighted-cone distance between a and b.

    Minimizes discrete path energy from the better of a straight-line
    and a cone-exponential initializer; the returned value is the
    length of the final path, a certified upper bound that decreases
    with more optimizer effort and is zero iff a == b. Boundary stalls
    raise OptimizerStallError with the best value so far attached.
    """
    if not g_ref.n == a.n == b.n:
        raise StructuralError("reference and endpoints must share a dimension")
    opts = opts or OptimizerOptions()
    setting = PointConeSetting(g_ref.mat, a.mat, b.mat)
    result = minimize(setting, opts)
    return result.length, PointPath(result.frames)


def conformal_theta_oracle(g_ref: SpdMatrix, g0: SpdMatrix, f0: float, f1: float) -> float:
    """Closed-form weighted length of the conformal segment f*g0.

    Integrating the weighted speed of t -> f(t) g0 gives
    (2/sqrt(n)) * sqrt(det(g_ref^{-1} g0)) * |f1^{n/2} - f0^{n/2}|,
    independent of the parametrization of f.
    """
    if not (f0 > 0 and f1 > 0):
        raise DomainError("conformal factors must be positive")
    if g_ref.n != g0.n:
        raise StructuralError(f"dimension mismatch: {g_ref.n} != {g0.n}")
    n = g0.n
    weight = math.sqrt(np.linalg.det(g0.mat) / np.linalg.det(g_ref.mat))
    return 2.0 / math.sqrt(n) * weight * abs(f1 ** (n / 2.0) - f0 ** (n / 2.0))


def chord_lower_bound(g_ref: SpdMatrix, a: SpdMatrix, b: SpdMatrix) -> float:
    """Certified positive separation for distinct endpoints.

    Any path from a to b travels a Frobenius distance of at least
    r = min(|b - a|_F, lambda_min/2) before leaving the eigenvalue ball
    around an endpoint, and inside that ball the weighted metric is
    bounded below by its frozen worst case. The better endpoint wins.
    Crude (often far below the distance) but sound, which is all the
    positivity tests need.
    """
    if not g_ref.n == a.n == b.n:
        raise StructuralError("reference and endpoints must share a dimension")
    chord = float(np.linalg.norm(b.mat - a.mat))
    if chord == 0.0:
        return 0.0
    det_ref = float(np.linalg.det(g_ref.mat))

    def at(x: SpdMatrix) -> float:
        lam = np.linalg.eigvalsh(x.mat)
        r = min(chord, 0.5 * lam[0])
        det_floor = float(np.prod(lam - r))
        return r * math.sqrt(det_floor / det_ref) / (lam[-1] + r)

    return max(at(a), at(b))
