"""Discrete path-energy minimization on SPD frame spaces.

Produces certified upper bounds on Riemannian distances by gradient
descent on the discrete energy

    E(path) = K * sum_k ||x_{k+1} - x_k||^2_{mid_k}

over the interior frames, with backtracking line search and an SPD
admissibility safeguard. Energy rather than length is minimized because
length is reparametrization-degenerate; energy minimizers are
constant-speed, and L <= sqrt(E) on unit time recovers the length bound.

Gradients are central finite differences in each symmetric frame entry.
The initial step size is chosen relative to the initial energy, which
makes the whole descent trajectory invariant under rescaling the metric
functional by a constant (so runs against proportional reference
metrics follow identical iterate sequences).

Two concrete settings are provided: the determinant-weighted SPD cone
at one point, and metric fields over a quadrature chart under the
integrated trace metric.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DomainError, OptimizerStallError, StructuralError
from .summation import pairwise_sum, segment_sum

ARMIJO_C = 1e-4
# relative center step for finite differences, times the frame scale
FD_STEP_REL = 1e-6
# backtracking gives up at step0 * 2^-MAX_HALVINGS
MAX_HALVINGS = 30


@dataclass(frozen=True)
class OptimizerOptions:
    """Knobs for :func:`minimize`; defaults suit desk-scale instances."""

    K: int = 16
    max_iters: int = 300
    grad_tol: float = 1e-9  # relative energy-decrease stop threshold
    step0: float = 1.0
    eig_floor: float = 1e-5  # admissibility margin relative to endpoint scale
    seed: int = 0

    def __post_init__(self):
        if self.K < 2:
            raise StructuralError(f"K must be >= 2, got {self.K}")
        for name in ("grad_tol", "step0", "eig_floor"):
            if not getattr(self, name) > 0:
                raise StructuralError(f"{name} must be > 0")
        if self.max_iters < 0:
            raise StructuralError("max_iters must be >= 0")


@dataclass
class Diagnostics:
    """Iteration trace of one minimization run."""

    initializer: str = ""
    initializer_energies: dict = field(default_factory=dict)
    energies: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    stalled: bool = False
    stop_reason: str = ""
    fd_one_sided: int = 0

    def trace_records(self) -> list[dict]:
        recs = []
        for i, e in enumerate(self.energies):
            rec = {"iter": i, "energy": float(e)}
            if i > 0:
                rec["step"] = float(self.steps[i - 1])
                rec["grad_norm"] = float(self.grad_norms[i - 1])
            recs.append(rec)
        return recs


@dataclass(frozen=True)
class MinimizeResult:
    frames: np.ndarray
    length: float
    energy: float
    diagnostics: Diagnostics


class GeodesicSetting(abc.ABC):
    """Endpoint pair plus the metric evaluator the energy is built from.

    Frames are float64 arrays with the matrix axes last; a path is a
    stack of K+1 frames, the first and last pinned to the endpoints.
    """

    start: np.ndarray
    end: np.ndarray

    @property
    def n(self) -> int:
        return self.start.shape[-1]

    @property
    def frame_shape(self) -> tuple:
        return self.start.shape

    @property
    def scale(self) -> float:
        """Characteristic magnitude: largest endpoint eigenvalue."""
        return float(max(K.eig_bounds(self.start)[1].max(), K.eig_bounds(self.end)[1].max()))

    @abc.abstractmethod
    def seg_terms(self, mids: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        """Pre-reduction squared-speed terms, leading axis = segment."""

    def speed_sq(self, mids: np.ndarray, deltas: np.ndarray) -> np.ndarray:
        terms = self.seg_terms(mids, deltas)
        if terms.ndim == 1:
            return terms
        return pairwise_sum(terms.reshape(terms.shape[0], -1), axis=-1)

    @abc.abstractmethod
    def initializers(self, segments: int) -> dict[str, np.ndarray]:
        """Candidate starting paths keyed by name."""

    def frame_min_eigs(self, frames: np.ndarray) -> np.ndarray:
        lo = K.eig_bounds(frames)[0]
        if lo.ndim > 1:
            lo = lo.reshape(lo.shape[0], -1).min(axis=1)
        return lo

    def grid(self, segments: int) -> np.ndarray:
        return np.linspace(0.0, 1.0, segments + 1)

    def linear_frames(self, segments: int) -> np.ndarray:
        ts = self.grid(segments).reshape((-1,) + (1,) * self.start.ndim)
        return (1.0 - ts) * self.start + ts * self.end

    def fiber_frames(self, segments: int) -> np.ndarray:
        log = K.spd_log(self.start, self.end)
        return K.spd_exp_family(self.start, log, self.grid(segments))


class PointConeSetting(GeodesicSetting):
    """SPD cone at one point under the determinant-weighted trace metric:

    ||d||^2 at m is tr(m^{-1} d m^{-1} d) * det(m) / det(g_ref).
    """

    def __init__(self, g_ref: np.ndarray, a: np.ndarray, b: np.ndarray):
        g_ref, a, b = (np.asarray(x, dtype=float) for x in (g_ref, a, b))
        if not g_ref.shape == a.shape == b.shape or g_ref.ndim != 2:
            raise StructuralError("endpoints and reference must share one (n, n) shape")
        self.g_ref = g_ref
        self.det_ref = float(np.linalg.det(g_ref))
        if self.det_ref <= 0:
            raise DomainError("reference metric must have positive determinant")
        self.start = a
        self.end = b

    def seg_terms(self, mids, deltas):
        return K.cone_seg_terms(mids, deltas, self.det_ref)

    def initializers(self, segments):
        return {"linear": self.linear_frames(segments), "fiber": self.fiber_frames(segments)}


class FieldSetting(GeodesicSetting):
    """Metric fields over a chart under the integrated trace metric."""

    def __init__(self, weights: np.ndarray, a: np.ndarray, b: np.ndarray):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        if a.shape != b.shape or a.ndim != 3 or a.shape[0] != self.weights.size:
            raise StructuralError("field endpoints must share one (P, n, n) shape")
        self.start = a
        self.end = b

    def seg_terms(self, mids, deltas):
        return K.l2_seg_terms(self.weights, mids, deltas)

    def initializers(self, segments):
        return {"linear": self.linear_frames(segments), "fiber": self.fiber_frames(segments)}


def discrete_energy(setting: GeodesicSetting, frames: np.ndarray) -> float:
    """K * sum_k ||delta_k||^2 at midframes; >= length^2, equal iff
    constant speed."""
    frames = np.asarray(frames, dtype=float)
    mids = 0.5 * (frames[:-1] + frames[1:])
    deltas = frames[1:] - frames[:-1]
    sq = np.maximum(setting.speed_sq(mids, deltas), 0.0)
    return (frames.shape[0] - 1) * segment_sum(sq)


def discrete_length(setting: GeodesicSetting, frames: np.ndarray) -> float:
    """sum_k ||delta_k|| at midframes; invariant under reversal."""
    frames = np.asarray(frames, dtype=float)
    mids = 0.5 * (frames[:-1] + frames[1:])
    deltas = frames[1:] - frames[:-1]
    sq = np.maximum(setting.speed_sq(mids, deltas), 0.0)
    return segment_sum(np.sqrt(sq))


def _sym_basis(n: int) -> np.ndarray:
    """Stack of n(n+1)/2 symmetric entry directions, upper-triangle order."""
    i, j = np.triu_indices(n)
    basis = np.zeros((i.size, n, n))
    basis[np.arange(i.size), i, j] = 1.0
    basis[np.arange(i.size), j, i] = 1.0
    return basis


def _fd_gradient(
    setting: GeodesicSetting,
    frames: np.ndarray,
    h: float,
    min_eigs: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Central-difference energy gradient per interior frame entry.

    All probes are fused into a single batched seg_terms evaluation:
    4 variants (left/right endpoint role, +/- sign) per symmetric entry
    direction. Probes that would leave the SPD cone fall back to a
    one-sided difference; the count of such entries is returned for
    diagnostics.
    """
    segs = frames.shape[0] - 1
    mids = 0.5 * (frames[:-1] + frames[1:])
    deltas = frames[1:] - frames[:-1]
    grad = np.zeros((segs - 1,) + setting.frame_shape)
    if min_eigs is None:
        min_eigs = setting.frame_min_eigs(frames)
    # Weyl: an entry perturbation of size h moves eigenvalues by at most h,
    # so probes are safely SPD when every interior frame clears 2h.
    risky = np.flatnonzero(min_eigs[1:-1] <= 2.0 * h) + 1
    one_sided = 0

    basis = _sym_basis(setting.n)  # (D, n, n)
    i_idx, j_idx = np.triu_indices(setting.n)
    # variant signs: (mid shift, delta shift) per role and sign
    mid_sign = np.array([+1.0, -1.0, +1.0, -1.0])
    delta_sign = np.array([-1.0, +1.0, +1.0, -1.0])
    # (D, 4, n, n) -> (4D, 1, [1,] n, n) broadcast against segments/points
    mid_shift = 0.5 * h * mid_sign[None, :, None, None] * basis[:, None]
    delta_shift = h * delta_sign[None, :, None, None] * basis[:, None]
    lead = (-1, 1) + (1,) * (frames.ndim - 3) + basis.shape[-2:]
    terms = setting.seg_terms(
        mids[np.newaxis] + mid_shift.reshape(lead),
        deltas[np.newaxis] + delta_shift.reshape(lead),
    )  # (4D, S[, P])
    terms = terms.reshape((basis.shape[0], 4) + terms.shape[1:])
    d_left = (terms[:, 0] - terms[:, 1]) / (2.0 * h)  # d(term_k)/d(frame_k entry)
    d_right = (terms[:, 2] - terms[:, 3]) / (2.0 * h)  # d(term_k)/d(frame_{k+1} entry)
    contrib = segs * (d_right[:, :-1] + d_left[:, 1:])  # (D, K-1[, P])
    contrib = np.moveaxis(contrib, 0, -1)  # (K-1[, P], D)
    grad[..., i_idx, j_idx] = contrib
    grad[..., j_idx, i_idx] = contrib

    for k in risky:
        one_sided += _one_sided_frame_gradient(setting, frames, int(k), h, grad)
    return grad, one_sided


def _one_sided_frame_gradient(setting, frames, k, h, grad) -> int:
    """Recompute frame k's gradient row with admissibility-aware probes."""
    segs = frames.shape[0] - 1
    count = 0
    i_idx, j_idx = np.triu_indices(setting.n)

    def local_terms(fr_k):
        window = np.stack([frames[k - 1], fr_k, frames[k + 1]])
        m = 0.5 * (window[:-1] + window[1:])
        d = window[1:] - window[:-1]
        t = setting.seg_terms(m, d)  # (2[, P])
        return t[0] + t[1]

    base = None
    for d, e in enumerate(_sym_basis(setting.n)):
        plus = frames[k] + h * e
        minus = frames[k] - h * e
        plus_ok = bool(setting.frame_min_eigs(plus[np.newaxis])[0] > 0)
        minus_ok = bool(setting.frame_min_eigs(minus[np.newaxis])[0] > 0)
        if plus_ok and minus_ok:
            val = (local_terms(plus) - local_terms(minus)) / (2 * h)
        else:
            count += 1
            if base is None:
                base = local_terms(frames[k])
            if plus_ok:
                val = (local_terms(plus) - base) / h
            elif minus_ok:
                val = (base - local_terms(minus)) / h
            else:
                val = 0.0
        ii, jj = int(i_idx[d]), int(j_idx[d])
        grad[k - 1, ..., ii, jj] = segs * val
        if ii != jj:
            grad[k - 1, ..., jj, ii] = segs * val
    return count


def gradient(setting: GeodesicSetting, frames: np.ndarray) -> np.ndarray:
    """Finite-difference energy gradient for each interior frame."""
    frames = np.asarray(frames, dtype=float)
    h = FD_STEP_REL * setting.scale
    return _fd_gradient(setting, frames, h)[0]


def minimize(
    setting: GeodesicSetting,
    opts: OptimizerOptions | None = None,
    extra_inits: dict[str, np.ndarray] | None = None,
    init: str = "best",
) -> MinimizeResult:
    """Gradient descent with backtracking on the interior frames.

    Every accepted iterate is admissible (min eigenvalue above the
    floor) and the accepted-energy sequence is nonincreasing. The
    returned length never exceeds that of any initializer candidate.
    Raises OptimizerStallError when admissibility cannot be restored at
    step0 * 2^-30; plain non-convergence within max_iters is flagged in
    diagnostics instead (the value is still a valid upper bound).
    """
    opts = opts or OptimizerOptions()
    diag = Diagnostics()

    if np.array_equal(setting.start, setting.end):
        frames = np.repeat(setting.start[np.newaxis], opts.K + 1, axis=0)
        diag.initializer = "constant"
        diag.converged = True
        diag.stop_reason = "endpoints equal"
        diag.energies = [0.0]
        return MinimizeResult(frames, 0.0, 0.0, diag)

    candidates = dict(setting.initializers(opts.K))
    if extra_inits:
        candidates.update(extra_inits)
    if init != "best":
        if init not in candidates:
            raise StructuralError(f"unknown initializer {init!r}; have {sorted(candidates)}")
        candidates = {init: candidates[init]}
    energies = {name: discrete_energy(setting, fr) for name, fr in candidates.items()}
    diag.initializer_energies = {k: float(v) for k, v in energies.items()}
    name = min(energies, key=lambda k: (energies[k], k))
    diag.initializer = name

    frames = np.array(candidates[name])
    scale = setting.scale
    floor = opts.eig_floor * scale
    h = FD_STEP_REL * scale
    energy = energies[name]
    diag.energies.append(float(energy))
    alpha0 = opts.step0 * scale * scale / max(energy, 1e-300)
    alpha_min = alpha0 * 2.0**-MAX_HALVINGS
    alpha_prev = alpha0

    min_eigs = setting.frame_min_eigs(frames)
    if not np.all(min_eigs[1:-1] >= floor) or not np.all(min_eigs > 0.0):
        raise DomainError("initializer frames violate the admissibility floor")

    prev_interior = None
    prev_grad = None

    for _ in range(opts.max_iters):
        grad, fallbacks = _fd_gradient(setting, frames, h, min_eigs)
        diag.fd_one_sided += fallbacks
        gnorm_sq = float(np.sum(grad * grad))
        if gnorm_sq == 0.0:
            diag.converged = True
            diag.stop_reason = "zero gradient"
            break

        # Barzilai-Borwein trial step (s.s / s.y) when curvature information
        # is available and positive; it is invariant under rescaling the
        # energy functional, like the rest of the scheme.
        alpha = min(alpha_prev * 2.0, alpha0 * 2.0**16)
        if prev_interior is not None:
            s = frames[1:-1] - prev_interior
            y = grad - prev_grad
            sy = float(np.sum(s * y))
            if sy > 0.0:
                alpha = min(float(np.sum(s * s)) / sy, alpha0 * 2.0**16)
        prev_interior = frames[1:-1].copy()
        prev_grad = grad

        accepted = False
        blocked_by_floor = False
        while alpha >= alpha_min:
            trial = frames.copy()
            trial[1:-1] -= alpha * grad
            trial_eigs = setting.frame_min_eigs(trial)
            if not np.all(trial_eigs[1:-1] >= floor):
                blocked_by_floor = True
                alpha *= 0.5
                continue
            blocked_by_floor = False
            trial_energy = discrete_energy(setting, trial)
            if trial_energy <= energy - ARMIJO_C * alpha * gnorm_sq:
                accepted = True
                break
            alpha *= 0.5

        if not accepted:
            if blocked_by_floor:
                diag.stalled = True
                diag.stop_reason = "admissibility unrecoverable at minimum step"
                diag.iterations = len(diag.energies) - 1
                best_len = discrete_length(setting, frames)
                raise OptimizerStallError(
                    "line search could not restore SPD admissibility",
                    best_length=best_len,
                    best_frames=frames,
                )
            diag.converged = True
            diag.stop_reason = "no admissible decrease at minimum step"
            break

        frames = trial
        min_eigs = trial_eigs
        rel_drop = (energy - trial_energy) / max(energy, 1e-300)
        energy = trial_energy
        alpha_prev = alpha
        diag.energies.append(float(energy))
        diag.steps.append(float(alpha))
        diag.grad_norms.append(float(np.sqrt(gnorm_sq)))
        if rel_drop < opts.grad_tol:
            diag.converged = True
            diag.stop_reason = "relative energy decrease below grad_tol"
            break
    else:
        diag.stop_reason = "max_iters reached"

    diag.iterations = len(diag.energies) - 1

    # the optimizer never returns a worse upper bound than its candidates
    length = discrete_length(setting, frames)
    for cname, cframes in candidates.items():
        clen = discrete_length(setting, cframes)
        if clen < length:
            frames, length = np.array(cframes), clen
            energy = energies[cname]
            diag.stop_reason += f"; initializer {cname!r} kept shorter length"
    return MinimizeResult(frames, float(length), float(energy), diag)
