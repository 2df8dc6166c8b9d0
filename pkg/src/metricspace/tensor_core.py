"""Exact small-dimension symmetric/SPD matrix algebra.

Every pointwise formula in the package bottoms out here: trace pairings,
determinant volumes, and the closed-form exponential/logarithm on the
SPD cone. Matrices are dense, n <= 8, and symmetry is structural: the
stored array is always bitwise equal to its transpose.

Matrix exp/log are computed through the symmetric eigendecomposition of
g0^{-1/2} a g0^{-1/2} rather than series summation, which preserves
symmetry exactly and is accurate for the full eigenvalue range the
path optimizers explore.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DomainError, StructuralError

# Relative SPD floor. Matrices whose smallest eigenvalue is at or below
# SPD_FLOOR times the largest are rejected: path optimizers may push
# iterates toward the cone boundary, and silent near-singular arithmetic
# would corrupt every downstream length.
SPD_FLOOR = K.SPD_FLOOR
MAX_DIM = K.MAX_DIM


def _as_exact_symmetric(mat: np.ndarray, what: str) -> np.ndarray:
    arr = np.array(mat, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise StructuralError(f"{what}: expected a square matrix, got shape {arr.shape}")
    n = arr.shape[0]
    if not 1 <= n <= MAX_DIM:
        raise StructuralError(f"{what}: dimension must be in [1, {MAX_DIM}], got {n}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"{what}: entries must be finite")
    if not np.array_equal(arr, arr.T):
        scale = float(np.max(np.abs(arr))) or 1.0
        gap = float(np.max(np.abs(arr - arr.T)))
        if gap > 1e-8 * scale:
            raise StructuralError(f"{what}: matrix is not symmetric (max asymmetry {gap:.3g})")
        arr = K.symmetrize(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SymMatrix:
    """A symmetric (0,2)-tensor at one point; storage is exactly symmetric."""

    mat: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "mat", _as_exact_symmetric(self.mat, type(self).__name__))

    @classmethod
    def from_upper(cls, n: int, upper) -> "SymMatrix":
        """Build from row-major upper-triangle entries."""
        upper = np.asarray(upper, dtype=float)
        if upper.shape != (n * (n + 1) // 2,):
            raise StructuralError(
                f"upper triangle for n={n} needs {n * (n + 1) // 2} entries, got {upper.shape}"
            )
        return cls(K.upper_to_full(n, upper))

    @classmethod
    def zero(cls, n: int) -> "SymMatrix":
        return cls(np.zeros((n, n)))

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    @property
    def upper(self) -> np.ndarray:
        """Row-major upper-triangle entries (the serialized form)."""
        return K.full_to_upper(self.mat)

    def __repr__(self) -> str:  # shape only; entries via .mat
        return f"{type(self).__name__}(n={self.n})"


@dataclass(frozen=True, repr=False)
class SpdMatrix(SymMatrix):
    """A symmetric positive-definite matrix: a metric at one point.

    Construction enforces the SPD floor (smallest eigenvalue above
    SPD_FLOOR times the largest); violations raise DomainError.
    """

    def __post_init__(self):
        super().__post_init__()
        lo, hi = K.eig_bounds(self.mat)
        if not lo > SPD_FLOOR * hi:
            raise DomainError(
                f"matrix is not SPD within floor: min eig {lo:.6g}, max eig {hi:.6g}"
            )

    @classmethod
    def identity(cls, n: int) -> "SpdMatrix":
        return cls(np.eye(n))


def sym(mat) -> SymMatrix:
    """Convenience constructor accepting lists or arrays."""
    return SymMatrix(np.asarray(mat, dtype=float))


def spd(mat) -> SpdMatrix:
    """Convenience constructor accepting lists or arrays."""
    return SpdMatrix(np.asarray(mat, dtype=float))


def _check_same_dim(*mats: SymMatrix) -> int:
    n = mats[0].n
    for m in mats[1:]:
        if m.n != n:
            raise StructuralError(f"dimension mismatch: {m.n} != {n}")
    return n


def trace_pair(g: SpdMatrix, h: SymMatrix, k: SymMatrix) -> float:
    """tr(g^{-1} h g^{-1} k): the trace pairing of h, k in the metric g.

    Symmetric in (h, k); with h == k it is the squared trace norm and is
    nonnegative.
    """
    _check_same_dim(g, h, k)
    return float(K.trace_pair(g.mat, h.mat, k.mat))


def sqrt_det(g: SpdMatrix) -> float:
    """sqrt(det g): the coordinate density of the volume form of g."""
    return float(np.sqrt(np.linalg.det(g.mat)))


def spd_exp_from(g0: SpdMatrix, a: SymMatrix) -> SpdMatrix:
    """Endpoint of the cone geodesic t -> g0 exp(t g0^{-1} a) at t = 1.

    Computed in the symmetrized form
    g0^{1/2} expm(g0^{-1/2} a g0^{-1/2}) g0^{1/2}; the result is SPD and
    det(result) = det(g0) * exp(tr(g0^{-1} a)).
    """
    _check_same_dim(g0, a)
    return SpdMatrix(K.spd_exp(g0.mat, a.mat))


def spd_log_from(g0: SpdMatrix, g1: SpdMatrix) -> SymMatrix:
    """The unique symmetric a with spd_exp_from(g0, a) == g1."""
    _check_same_dim(g0, g1)
    return SymMatrix(K.spd_log(g0.mat, g1.mat))


def traceless_part(g: SpdMatrix, h: SymMatrix) -> SymMatrix:
    """h minus its pure-trace component: h - (tr_g(h)/n) g.

    The result has tr_g == 0 and is trace-orthogonal to g, so the split
    h = traceless + pure-trace is orthogonal for the trace pairing.
    """
    n = _check_same_dim(g, h)
    t = float(K.trace_quotient(g.mat, h.mat))
    return SymMatrix(h.mat - (t / n) * g.mat)


def trace_in(g: SpdMatrix, h: SymMatrix) -> float:
    """tr(g^{-1} h)."""
    _check_same_dim(g, h)
    return float(K.trace_quotient(g.mat, h.mat))
