"""Discretized metric fields: integrals, volumes, path lengths, and checkers.

The base manifold is represented by a quadrature chart: sample points
with positive weights approximating the coordinate measure. A metric
field assigns an SPD matrix to every chart point; integrals are weighted
sums reduced through the fixed pairwise tree of :mod:`.summation`.

Fields are not required to be smooth across points. The chart is a
finite surrogate, so "differ at a point" is taken literally: positive
definiteness of the integrated distance only needs a single point with
positive weight where the fields differ (a continuum treatment would
instead pass through an open neighborhood of that point).
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels as K
from . import pointwise_geometry as pw
from .errors import DomainError, OptimizerStallError, StructuralError
from .path_optimizer import OptimizerOptions
from .summation import pairwise_sum, resolve_workers, segment_sum, tree_sum
from .tensor_core import MAX_DIM, SpdMatrix, SymMatrix

# Discretization tolerance for theorem checkers: eps_disc = C / K^2 per
# unit of scale. The midpoint rule is second order; C was calibrated on
# the analytic conformal-path equality case (where the checked
# inequality is tight) with a ~30x safety factor.
EPS_DISC_C = 0.25


def eps_disc(segments: int, scale: float = 1.0) -> float:
    """Discretization budget C * scale / K^2 for a K-segment path."""
    return EPS_DISC_C * abs(scale) / float(segments) ** 2


@dataclass(frozen=True)
class QuadChart:
    """Sample points and positive weights approximating the base measure."""

    n: int
    ids: tuple[str, ...]
    weights: np.ndarray = field(repr=False)
    coords: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_DIM:
            raise StructuralError(f"fiber dimension must be in [1, {MAX_DIM}], got {self.n}")
        ids = tuple(str(i) for i in self.ids)
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or len(ids) != w.size or w.size == 0:
            raise StructuralError("chart needs one weight per point id")
        if len(set(ids)) != len(ids):
            raise StructuralError("chart point ids must be unique")
        if not np.all(np.isfinite(w)) or not np.all(w > 0):
            raise StructuralError("chart weights must be finite and > 0")
        w.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(ids)})

    @property
    def size(self) -> int:
        return len(self.ids)

    def fingerprint(self) -> str:
        payload = json.dumps(
            {"n": self.n, "ids": list(self.ids), "weights": [repr(float(w)) for w in self.weights]}
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def indices(self, region: Iterable[str] | None = None) -> np.ndarray:
        """Sorted chart indices for a region (None means the full chart)."""
        if region is None:
            return np.arange(self.size)
        index = self._index
        out = []
        for pid in region:
            if pid not in index:
                raise StructuralError(f"region point {pid!r} is not in the chart")
            out.append(index[pid])
        return np.array(sorted(set(out)), dtype=int)


def check_same_chart(*objs) -> QuadChart:
    chart = objs[0].chart
    for o in objs[1:]:
        if o.chart is chart:
            continue
        if (
            o.chart.n != chart.n
            or o.chart.ids != chart.ids
            or not np.array_equal(o.chart.weights, chart.weights)
        ):
            raise StructuralError(
                "chart mismatch: "
                f"fingerprints {chart.fingerprint()} != {o.chart.fingerprint()}"
            )
    return chart


def _validated_stack(chart: QuadChart, values, what: str, spd: bool) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != (chart.size, chart.n, chart.n):
        raise StructuralError(
            f"{what}: expected shape {(chart.size, chart.n, chart.n)}, got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"{what}: entries must be finite")
    if not np.array_equal(arr, np.swapaxes(arr, -1, -2)):
        scale = float(np.max(np.abs(arr))) or 1.0
        gap = float(np.max(np.abs(arr - np.swapaxes(arr, -1, -2))))
        if gap > 1e-8 * scale:
            raise StructuralError(f"{what}: values are not symmetric (max asymmetry {gap:.3g})")
        arr = K.symmetrize(arr)
    if spd:
        margin = K.spd_margin(arr)
        bad = np.flatnonzero(~(margin > 0.0))
        if bad.size:
            raise DomainError(
                f"{what}: point {chart.ids[bad[0]]!r} is not SPD within the floor"
            )
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MetricField:
    """Per-point SPD matrices over a chart: a discretized metric."""

    chart: QuadChart
    values: np.ndarray = field(repr=False)

    _spd = True

    def __post_init__(self):
        object.__setattr__(
            self,
            "values",
            _validated_stack(self.chart, self.values, type(self).__name__, self._spd),
        )

    @classmethod
    def _wrap(cls, chart: QuadChart, values: np.ndarray):
        """Skip validation for values guaranteed by construction (exp maps)."""
        obj = object.__new__(cls)
        values = K.symmetrize(np.asarray(values, dtype=float))
        values.flags.writeable = False
        object.__setattr__(obj, "chart", chart)
        object.__setattr__(obj, "values", values)
        return obj

    @classmethod
    def constant(cls, chart: QuadChart, mat: SymMatrix):
        return cls(chart, np.broadcast_to(mat.mat, (chart.size, chart.n, chart.n)).copy())

    def point(self, pid: str) -> SpdMatrix:
        i = self.chart.indices([pid])[0]
        return SpdMatrix(self.values[i])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, type(self))
            and check_same_chart(self, other) is not None
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class TangentField(MetricField):
    """Per-point symmetric matrices over a chart: a tangent to the metric."""

    _spd = False

    @classmethod
    def zero(cls, chart: QuadChart):
        return cls(chart, np.zeros((chart.size, chart.n, chart.n)))

    def point(self, pid: str) -> SymMatrix:
        i = self.chart.indices([pid])[0]
        return SymMatrix(self.values[i])


@dataclass(frozen=True)
class DiscretePath:
    """K+1 metric-field frames on the uniform time grid t_k = k/K."""

    chart: QuadChart
    frames: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.frames, dtype=float)
        if arr.ndim != 4 or arr.shape[0] < 2:
            raise StructuralError("path needs at least two frames of shape (P, n, n)")
        if arr.shape[1:] != (self.chart.size, self.chart.n, self.chart.n):
            raise StructuralError(
                f"path frames must have shape (K+1, {self.chart.size}, "
                f"{self.chart.n}, {self.chart.n}), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise StructuralError("path entries must be finite")
        if not np.array_equal(arr, np.swapaxes(arr, -1, -2)):
            arr = K.symmetrize(arr)
        margin = K.spd_margin(arr)
        if not np.all(margin > 0.0):
            k, p = np.argwhere(~(margin > 0.0))[0]
            raise DomainError(
                f"path frame {k} is not SPD at point {self.chart.ids[p]!r}"
            )
        arr = np.array(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "frames", arr)

    @classmethod
    def _wrap(cls, chart: QuadChart, frames: np.ndarray):
        """Skip validation for frames guaranteed SPD by construction."""
        obj = object.__new__(cls)
        frames = K.symmetrize(np.asarray(frames, dtype=float))
        frames.flags.writeable = False
        object.__setattr__(obj, "chart", chart)
        object.__setattr__(obj, "frames", frames)
        return obj

    @classmethod
    def from_fields(cls, fields: Sequence[MetricField]) -> "DiscretePath":
        chart = check_same_chart(*fields)
        return cls(chart, np.stack([f.values for f in fields]))

    @property
    def segments(self) -> int:
        return self.frames.shape[0] - 1

    def frame(self, k: int) -> MetricField:
        return MetricField._wrap(self.chart, self.frames[k])

    def endpoints(self) -> tuple[MetricField, MetricField]:
        return self.frame(0), self.frame(-1)

    def reverse(self) -> "DiscretePath":
        return DiscretePath._wrap(self.chart, self.frames[::-1])


# ---------------------------------------------------------------------------
# Integrals


def l2_inner(g: MetricField, h: TangentField, k: TangentField) -> float:
    """Integrated trace pairing: sum_i w_i tr_{g_i}(h_i k_i) sqrt(det g_i)."""
    chart = check_same_chart(g, h, k)
    tr = K.trace_pair(g.values, h.values, k.values)
    terms = chart.weights * tr * K.sqrt_det(g.values)
    return tree_sum(terms)


def l2_norm(g: MetricField, h: TangentField) -> float:
    """Norm induced by :func:`l2_inner`; zero exactly for the zero field."""
    chart = check_same_chart(g, h)
    terms = K.l2_seg_terms(chart.weights, g.values, h.values)
    return float(np.sqrt(max(float(pairwise_sum(terms)), 0.0)))


def volume(g: MetricField, region: Iterable[str] | None = None) -> float:
    """Weighted volume of a region: sum_i w_i sqrt(det g_i)."""
    idx = g.chart.indices(region)
    if idx.size == 0:
        return 0.0
    terms = g.chart.weights[idx] * K.sqrt_det(g.values[idx])
    return tree_sum(terms)


def path_length(path: DiscretePath) -> float:
    """Discrete length: sum_k ||frame_{k+1} - frame_k|| at segment midframes.

    Midframes are entrywise averages, which makes the value exactly
    invariant under path reversal.
    """
    frames = path.frames
    mids = 0.5 * (frames[:-1] + frames[1:])
    deltas = frames[1:] - frames[:-1]
    margin = K.spd_margin(mids)
    if not np.all(margin > 0.0):
        k, p = np.argwhere(~(margin > 0.0))[0]
        raise DomainError(f"midframe {k} is not SPD at point {path.chart.ids[p]!r}")
    terms = K.l2_seg_terms(path.chart.weights, mids, deltas)
    speed_sq = np.maximum(pairwise_sum(terms, axis=-1), 0.0)
    return segment_sum(np.sqrt(speed_sq))


def path_energy(path: DiscretePath) -> float:
    """Discrete energy K * sum_k ||delta_k||^2; >= length^2 on unit time."""
    frames = path.frames
    mids = 0.5 * (frames[:-1] + frames[1:])
    deltas = frames[1:] - frames[:-1]
    terms = K.l2_seg_terms(path.chart.weights, mids, deltas)
    speed_sq = np.maximum(pairwise_sum(terms, axis=-1), 0.0)
    return path.segments * segment_sum(speed_sq)


# ---------------------------------------------------------------------------
# Integrated pointwise distance


def theta_Y(
    g_ref: MetricField,
    g0: MetricField,
    g1: MetricField,
    region: Iterable[str] | None = None,
    opts: OptimizerOptions | None = None,
) -> float:
    """Integral over a region of the pointwise cone distance.

    Each chart point contributes w_i * theta_i * sqrt(det g_ref_i) where
    theta_i is the optimizer upper bound for the determinant-weighted
    cone distance between g0_i and g1_i. Monotone in the region and zero
    exactly when g0 == g1 on it.
    """
    value, _ = theta_Y_details(g_ref, g0, g1, region, opts)
    return value


def theta_Y_details(
    g_ref: MetricField,
    g0: MetricField,
    g1: MetricField,
    region: Iterable[str] | None = None,
    opts: OptimizerOptions | None = None,
) -> tuple[float, list[dict]]:
    """Like :func:`theta_Y` but also returns the per-point breakdown."""
    chart = check_same_chart(g_ref, g0, g1)
    idx = chart.indices(region)
    opts = opts or OptimizerOptions()
    dens = K.sqrt_det(g_ref.values)

    def one(i: int) -> float:
        if np.array_equal(g0.values[i], g1.values[i]):
            return 0.0
        try:
            theta, _ = pw.theta_distance(
                SpdMatrix(g_ref.values[i]),
                SpdMatrix(g0.values[i]),
                SpdMatrix(g1.values[i]),
                opts,
            )
        except OptimizerStallError as err:
            raise OptimizerStallError(
                f"pointwise optimizer stalled at point {chart.ids[i]!r}: {err}",
                best_length=err.best_length,
                point_id=chart.ids[i],
            ) from err
        return theta

    workers = resolve_workers()
    if workers > 1 and idx.size > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            thetas = list(pool.map(one, idx.tolist()))
    else:
        thetas = [one(i) for i in idx.tolist()]

    details = [
        {
            "id": chart.ids[i],
            "theta": float(t),
            "weight": float(chart.weights[i]),
            "density": float(dens[i]),
        }
        for i, t in zip(idx, thetas)
    ]
    terms = np.array([d["weight"] * d["theta"] * d["density"] for d in details])
    return (tree_sum(terms) if terms.size else 0.0), details


# ---------------------------------------------------------------------------
# Check reports


@dataclass(frozen=True)
class CheckReport:
    """Machine-readable outcome of one inequality check."""

    check: str
    lhs: float
    rhs: float
    slack: float
    tolerance: float
    passed: bool
    details: dict

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "slack": float(self.slack),
            "pass": bool(self.passed),
            "tolerance": float(self.tolerance),
            "details": self.details,
        }


def _report(check: str, lhs: float, rhs: float, slack: float, tol: float, details: dict) -> CheckReport:
    return CheckReport(
        check=check,
        lhs=float(lhs),
        rhs=float(rhs),
        slack=float(slack),
        tolerance=float(tol),
        passed=bool(slack >= -tol),
        details=details,
    )


def check_lipschitz_sqrtvol(path: DiscretePath, region: Iterable[str] | None = None) -> CheckReport:
    """Lipschitz bound of sqrt-volume along a path.

    lhs = |sqrt(Vol(Y, end)) - sqrt(Vol(Y, start))|, rhs = (sqrt(n)/4) *
    path length; the continuum inequality lhs <= rhs holds for every
    path, so failures beyond the discretization budget indicate bugs.
    """
    g_start, g_end = path.endpoints()
    lhs = abs(np.sqrt(volume(g_end, region)) - np.sqrt(volume(g_start, region)))
    length = path_length(path)
    rhs = np.sqrt(path.chart.n) / 4.0 * length
    tol = eps_disc(path.segments, scale=max(lhs, rhs, 1.0))
    return _report(
        "lipschitz-sqrtvol",
        lhs,
        rhs,
        rhs - lhs,
        tol,
        {"length": float(length), "segments": path.segments},
    )


def check_theta_bound(
    path: DiscretePath,
    g_ref: MetricField,
    opts: OptimizerOptions | None = None,
) -> CheckReport:
    """Integrated-distance bound along a path.

    lhs = Theta over the full chart between the path endpoints; rhs =
    L * (sqrt(Vol(start)) + (sqrt(n)/4) L) with L the path length. The
    tolerance budgets both discretization and the 1% optimizer contract,
    since lhs is itself an optimizer upper bound.
    """
    g0, g1 = path.endpoints()
    check_same_chart(g_ref, g0)
    length = path_length(path)
    lhs, details = theta_Y_details(g_ref, g0, g1, None, opts)
    vol0 = volume(g0)
    rhs = length * (np.sqrt(vol0) + np.sqrt(path.chart.n) / 4.0 * length)
    tol = eps_disc(path.segments, scale=max(lhs, rhs, 1.0)) + 0.01 * max(lhs, rhs)
    return _report(
        "theta-bound",
        lhs,
        rhs,
        rhs - lhs,
        tol,
        {"length": float(length), "volume_start": float(vol0), "points": details},
    )


def check_theta_reference_independence(
    g0: MetricField,
    g1: MetricField,
    g_ref_a: MetricField,
    g_ref_b: MetricField,
    region: Iterable[str] | None = None,
    opts: OptimizerOptions | None = None,
) -> CheckReport:
    """Theta computed against two reference fields must agree.

    lhs and rhs are the two integrated values; slack is the negated
    relative gap so the report passes when the gap is within tolerance.
    """
    check_same_chart(g0, g1, g_ref_a, g_ref_b)
    va, da = theta_Y_details(g_ref_a, g0, g1, region, opts)
    vb, db = theta_Y_details(g_ref_b, g0, g1, region, opts)
    scale = max(abs(va), abs(vb), 1e-30)
    gap = abs(va - vb) / scale
    tol = 1e-3
    return _report(
        "theta-reference-independence",
        va,
        vb,
        -gap,
        tol,
        {"relative_gap": float(gap), "points_a": da, "points_b": db},
    )
