"""Batched array kernels for small symmetric/SPD matrices.

Internal module: everything here operates on raw float64 ndarrays with
matrix axes last, shape (..., n, n), and performs no domain validation
beyond what the math requires. Public modules wrap these with typed
containers and error reporting.
"""

from __future__ import annotations

import numpy as np

# Relative SPD floor: matrices with min-eigenvalue <= SPD_FLOOR * max-eigenvalue
# are treated as outside the cone. Chosen so path optimizers pushing iterates
# toward the cone boundary fail loudly instead of returning garbage.
SPD_FLOOR = 1e-10

MAX_DIM = 8


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Exactly symmetric part; (a+aT)/2 is bitwise symmetric in IEEE."""
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def eig_bounds(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(min, max) eigenvalues of symmetric matrices, batched."""
    w = np.linalg.eigvalsh(a)
    return w[..., 0], w[..., -1]


def spd_margin(a: np.ndarray) -> np.ndarray:
    """lambda_min - SPD_FLOOR * lambda_max, batched; > 0 means inside the cone."""
    lo, hi = eig_bounds(a)
    return lo - SPD_FLOOR * hi


def is_spd(a: np.ndarray) -> np.ndarray:
    return spd_margin(a) > 0.0


def sqrt_det(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.linalg.det(a))


def spd_sqrt_invsqrt(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(g^{1/2}, g^{-1/2}) via eigendecomposition, batched."""
    w, q = np.linalg.eigh(g)
    root = np.sqrt(w)
    half = np.einsum("...ik,...k,...jk->...ij", q, root, q)
    inv_half = np.einsum("...ik,...k,...jk->...ij", q, 1.0 / root, q)
    return symmetrize(half), symmetrize(inv_half)


def spd_exp(g0: np.ndarray, a: np.ndarray) -> np.ndarray:
    """g0^{1/2} expm(g0^{-1/2} a g0^{-1/2}) g0^{1/2}, batched.

    Equals g0 @ expm(inv(g0) @ a) but stays symmetric by construction;
    the inner exponential is computed spectrally, not by series.
    """
    half, inv_half = spd_sqrt_invsqrt(g0)
    inner = symmetrize(inv_half @ a @ inv_half)
    w, q = np.linalg.eigh(inner)
    e = np.einsum("...ik,...k,...jk->...ij", q, np.exp(w), q)
    return symmetrize(half @ e @ half)


def spd_log(g0: np.ndarray, g1: np.ndarray) -> np.ndarray:
    """Inverse of :func:`spd_exp` in its second argument, batched."""
    half, inv_half = spd_sqrt_invsqrt(g0)
    inner = symmetrize(inv_half @ g1 @ inv_half)
    w, q = np.linalg.eigh(inner)
    lg = np.einsum("...ik,...k,...jk->...ij", q, np.log(w), q)
    return symmetrize(half @ lg @ half)


def spd_exp_family(g0: np.ndarray, a: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Stack of spd_exp(g0, t*a) for each t, sharing one eigendecomposition.

    g0, a: (..., n, n); ts: (T,). Returns (T, ..., n, n).
    """
    half, inv_half = spd_sqrt_invsqrt(g0)
    inner = symmetrize(inv_half @ a @ inv_half)
    w, q = np.linalg.eigh(inner)
    # scaled eigenvalues: (T, ..., n)
    wt = np.exp(ts.reshape((-1,) + (1,) * w.ndim) * w[np.newaxis])
    e = np.einsum("...ik,t...k,...jk->t...ij", q, wt, q)
    return symmetrize(half @ e @ half)


def trace_pair(g: np.ndarray, h: np.ndarray, k: np.ndarray) -> np.ndarray:
    """tr(g^{-1} h g^{-1} k), batched over leading axes."""
    x = np.linalg.solve(g, h)
    y = np.linalg.solve(g, k)
    return np.einsum("...ij,...ji->...", x, y)


def trace_quotient(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """tr(g^{-1} h), batched."""
    return np.einsum("...ii->...", np.linalg.solve(g, h))


def cone_seg_terms(mids: np.ndarray, deltas: np.ndarray, det_ref: float) -> np.ndarray:
    """Determinant-weighted squared speed per segment on the SPD cone.

    tr(m^{-1} d m^{-1} d) * det(m) / det_ref for each leading index.
    """
    x = np.linalg.solve(mids, deltas)
    tr = np.einsum("...ij,...ji->...", x, x)
    return tr * (np.linalg.det(mids) / det_ref)


def l2_seg_terms(weights: np.ndarray, mids: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """Per-point integrand of the trace-form metric: w * tr_m(d^2) * sqrt(det m).

    mids, deltas: (..., P, n, n); weights: (P,). Returns (..., P); the
    caller reduces over the point axis with the fixed pairwise tree.
    """
    x = np.linalg.solve(mids, deltas)
    tr = np.einsum("...ij,...ji->...", x, x)
    return weights * tr * sqrt_det(mids)


def upper_to_full(n: int, upper: np.ndarray) -> np.ndarray:
    """Full symmetric matrix from row-major upper-triangle entries."""
    m = np.zeros((n, n))
    iu = np.triu_indices(n)
    m[iu] = upper
    m[(iu[1], iu[0])] = upper
    return m


def full_to_upper(mat: np.ndarray) -> np.ndarray:
    """Row-major upper-triangle entries of a symmetric matrix."""
    n = mat.shape[-1]
    return mat[np.triu_indices(n)]
