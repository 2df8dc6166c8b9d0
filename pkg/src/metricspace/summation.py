"""Deterministic floating-point reductions and worker-count resolution.

Two reduction rules are used throughout the package, both documented and
fixed so that results never depend on how work is scheduled:

* sums over chart points use :func:`tree_sum` / :func:`pairwise_sum`, a
  fixed pairwise tree in point-index order (adjacent pairs, odd tail
  carried). Parallel evaluation over points must fill a buffer indexed
  by point and reduce through this tree, which makes the result
  independent of worker count.
* sums over path segments use :func:`segment_sum` (``math.fsum``), the
  correctly rounded total. Because it is exact, it is invariant under
  segment reversal, which path-length symmetry tests rely on.
"""

from __future__ import annotations

import math
import os

import numpy as np

THREADS_ENV = "METRICSPACE_THREADS"


def pairwise_sum(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Fixed pairwise-tree sum along ``axis``.

    Pairs adjacent elements ((0,1), (2,3), ...) and recurses; an odd
    trailing element is carried to the next level unchanged.
    """
    a = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = a.shape[-1]
    if n == 0:
        return np.zeros(a.shape[:-1])
    while n > 1:
        m = n // 2
        head = a[..., : 2 * m : 2] + a[..., 1 : 2 * m : 2]
        if n % 2:
            a = np.concatenate([head, a[..., -1:]], axis=-1)
            n = m + 1
        else:
            a = head
            n = m
    return a[..., 0]


def tree_sum(values) -> float:
    """Pairwise-tree sum of a 1-D sequence, as a Python float."""
    return float(pairwise_sum(np.ravel(np.asarray(values, dtype=float))))


def segment_sum(values) -> float:
    """Correctly rounded sum (math.fsum); order-independent by construction."""
    return math.fsum(float(v) for v in np.ravel(np.asarray(values, dtype=float)))


def resolve_workers() -> int:
    """Worker cap for parallel per-point loops.

    Reads the METRICSPACE_THREADS environment variable; results are
    identical for every setting, only wall time changes.
    """
    raw = os.environ.get(THREADS_ENV, "")
    if raw.strip():
        try:
            cap = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}")
        if cap < 1:
            raise ValueError(f"{THREADS_ENV} must be >= 1, got {cap}")
        return cap
    return min(os.cpu_count() or 1, 8)
