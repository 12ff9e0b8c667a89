"""Dense complex linear algebra and time-ordered propagators.

Everything downstream works on explicit matrices, so this module is the
single place where inputs are validated, decomposed and exponentiated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DimensionError, InputError, PreconditionError

MAX_DIM = 4096


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return ``a`` as a finite complex 2-D array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if max(arr.shape) > MAX_DIM:
        raise DimensionError(f"{name} dimension {max(arr.shape)} exceeds cap {MAX_DIM}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


def as_square(a, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def is_unitary(u: np.ndarray, atol: float = 1e-10) -> bool:
    u = np.asarray(u)
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[1]), atol=atol, rtol=0))


def spectral_norm(a) -> float:
    """Largest singular value. Accepts a single matrix or a stack of them."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim == 2:
        if arr.size == 0:
            return 0.0
        return float(np.linalg.norm(arr, 2))
    return np.linalg.svd(arr, compute_uv=False).max(axis=-1)


@dataclass(frozen=True)
class SVDFactors:
    """Thin SVD ``A = W diag(s) Vh`` with ``V = Vh^dagger``."""

    W: np.ndarray
    s: np.ndarray
    Vh: np.ndarray

    @property
    def V(self) -> np.ndarray:
        return self.Vh.conj().T

    def reconstruct(self) -> np.ndarray:
        return (self.W * self.s) @ self.Vh


def svd(a) -> SVDFactors:
    """Full SVD of a square or rectangular complex matrix."""
    arr = as_matrix(a)
    W, s, Vh = np.linalg.svd(arr, full_matrices=True)
    k = min(arr.shape)
    # keep square unitary factors but only k singular values
    return SVDFactors(W=W[:, :k] if arr.shape[0] != arr.shape[1] else W, s=s[:k],
                      Vh=Vh[:k, :] if arr.shape[0] != arr.shape[1] else Vh)


def matrix_exp(a) -> np.ndarray:
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    return scipy.linalg.expm(as_square(a))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def ordered_product(mats: np.ndarray) -> np.ndarray:
    """Return ``mats[-1] @ ... @ mats[0]`` using a balanced reduction tree."""
    mats = np.asarray(mats)
    if len(mats) == 0:
        raise InputError("empty product")
    while len(mats) > 1:
        if len(mats) % 2:
            tail = mats[-1:]
            mats = np.concatenate([mats[1:-1:2] @ mats[0:-1:2], tail])
        else:
            mats = mats[1::2] @ mats[0::2]
    return mats[0]


class TimeDependentMatrix:
    """A matrix-valued function of time on ``[0, T]`` with a norm bound.

    ``func`` maps a float to an ``(n, n)`` array. ``batch`` (optional) maps a
    1-D array of times to an ``(k, n, n)`` stack and is used for large
    samples. ``variation`` (optional) returns an upper bound on the total
    variation over ``[a, b]``; without it a dyadic estimate is used.
    ``breakpoints`` lists interior times where the function may jump; the
    reference propagator restarts its subdivision at each of them.
    ``norm_bound`` (optional) gives a bound on ``||A(t)||`` over a
    sub-interval, for meshes that adapt to the local size of ``A``.
    """

    def __init__(
        self,
        func: Callable[[float], np.ndarray],
        alpha: float,
        T: float,
        *,
        batch: Callable[[np.ndarray], np.ndarray] | None = None,
        variation: Callable[[float, float], float] | None = None,
        breakpoints: Sequence[float] = (),
        piecewise_constant: bool = False,
        norm_bound: Callable[[float, float], float] | None = None,
        name: str = "",
    ):
        if not (np.isfinite(alpha) and alpha >= 0):
            raise InputError(f"norm bound must be finite and non-negative, got {alpha}")
        if not (np.isfinite(T) and T > 0):
            raise InputError(f"horizon must be positive, got {T}")
        self.func = func
        self.alpha = float(alpha)
        self.T = float(T)
        self._batch = batch
        self._variation = variation
        self.breakpoints = tuple(sorted(float(b) for b in breakpoints))
        self.piecewise_constant = piecewise_constant
        self._norm_bound = norm_bound
        self.name = name
        probe = as_square(func(0.0), "A(0)")
        self.dim = probe.shape[0]

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.func(float(t)), dtype=complex)

    def sample(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self._batch is not None:
            return np.asarray(self._batch(ts), dtype=complex)
        return np.stack([self(t) for t in ts]) if len(ts) else np.zeros((0, self.dim, self.dim), complex)

    def variation(self, a: float, b: float, refinement: int = 14) -> float:
        if self._variation is not None:
            return float(self._variation(a, b))
        return total_variation(self, a, b, refinement)

    @property
    def is_constant(self) -> bool:
        return self.piecewise_constant and not self.breakpoints

    def local_alpha(self, a: float, b: float) -> float:
        """Norm bound on ``[a, b]``; the global bound unless a local one was given."""
        if self._norm_bound is None:
            return self.alpha
        return min(self.alpha, float(self._norm_bound(a, b)))

    def pieces(self, a: float, b: float) -> list[tuple[float, float]]:
        """Split ``[a, b]`` at the declared breakpoints lying strictly inside."""
        cuts = [a] + [p for p in self.breakpoints if a < p < b] + [b]
        return list(zip(cuts[:-1], cuts[1:]))

    def check_norm_bound(self, samples: int = 257) -> float:
        """Largest sampled norm; raises if it exceeds the declared bound."""
        ts = np.linspace(0.0, self.T, samples)
        worst = float(np.max(spectral_norm(self.sample(ts))))
        if worst > self.alpha * (1 + 1e-9):
            raise PreconditionError(f"sampled norm {worst} exceeds declared bound {self.alpha}")
        return worst


@dataclass(frozen=True)
class TimeGrid:
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or len(pts) < 2:
            raise InputError("a time grid needs at least two points")
        if pts[0] != 0.0:
            raise InputError("a time grid must start at 0")
        if np.any(np.diff(pts) <= 0):
            raise InputError("time grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def T(self) -> float:
        return float(self.points[-1])

    @property
    def segments(self) -> list[tuple[float, float]]:
        return list(zip(self.points[:-1].tolist(), self.points[1:].tolist()))

    def __len__(self) -> int:
        return len(self.points) - 1


def _midpoint_steps(A: TimeDependentMatrix, a: float, b: float, n: int) -> np.ndarray:
    h = (b - a) / n
    ts = a + (np.arange(n) + 0.5) * h
    return scipy.linalg.expm(h * A.sample(ts))


def _magnus4_steps(A: TimeDependentMatrix, a: float, b: float, n: int) -> np.ndarray:
    h = (b - a) / n
    mid = a + (np.arange(n) + 0.5) * h
    off = h / (2 * np.sqrt(3.0))
    A1 = A.sample(mid - off)
    A2 = A.sample(mid + off)
    omega = 0.5 * h * (A1 + A2) + (np.sqrt(3.0) / 12) * h * h * (A2 @ A1 - A1 @ A2)
    return scipy.linalg.expm(omega)


_POLICIES = {"midpoint": _midpoint_steps, "magnus4": _magnus4_steps}
_CHUNK = 1 << 15


def _propagate(A, a, b, n, policy) -> np.ndarray:
    step = _POLICIES[policy]
    if n <= _CHUNK:
        return ordered_product(step(A, a, b, n))
    out = np.eye(A.dim, dtype=complex)
    h = (b - a) / n
    for start in range(0, n, _CHUNK):
        k = min(_CHUNK, n - start)
        out = ordered_product(step(A, a + start * h, a + (start + k) * h, k)) @ out
    return out


def time_ordered_exp(
    A: TimeDependentMatrix,
    a: float,
    b: float,
    tol: float = 1e-10,
    policy: str = "midpoint",
    max_steps: int = 1 << 22,
) -> np.ndarray:
    """Reference propagator of ``dx/dt = A(t) x`` from ``a`` to ``b``.

    Each smooth piece (split at declared breakpoints) is approximated by an
    ordered product of one-step exponentials. The step is halved until two
    successive products differ by less than ``tol / 2`` in spectral norm.
    """
    if policy not in _POLICIES:
        raise InputError(f"unknown policy {policy!r}; choose from {sorted(_POLICIES)}")
    if not (b >= a):
        raise InputError(f"need a <= b, got [{a}, {b}]")
    if tol <= 0:
        raise InputError("tol must be positive")
    out = np.eye(A.dim, dtype=complex)
    if b == a:
        return out
    pieces = A.pieces(a, b)
    piece_tol = tol / len(pieces)
    for lo, hi in pieces:
        n = max(1, int(np.ceil(4 * A.alpha * (hi - lo))))
        prev = _propagate(A, lo, hi, n, policy)
        while True:
            n *= 2
            cur = _propagate(A, lo, hi, n, policy)
            if spectral_norm(cur - prev) < piece_tol / 2:
                break
            if n >= max_steps:
                raise ConvergenceError(
                    f"no convergence on [{lo}, {hi}] after {n} steps "
                    f"(last difference {spectral_norm(cur - prev):.3e})",
                    last=cur, previous=prev)
            prev = cur
        out = cur @ out
    return out


def total_variation(A: TimeDependentMatrix, a: float, b: float, refinement: int = 12) -> float:
    """Variation of ``A`` over ``[a, b]`` on dyadic partitions.

    Dyadic partitions are nested, so the sum over the finest one (``2**refinement``
    intervals) is the largest of all of them and is a lower bound on the true
    total variation.
    """
    if refinement < 0:
        raise InputError("refinement must be non-negative")
    if b <= a:
        return 0.0
    ts = np.linspace(a, b, (1 << refinement) + 1)
    vals = A.sample(ts)
    return float(np.sum(spectral_norm(np.diff(vals, axis=0))))


def total_variation_profile(A: TimeDependentMatrix, a: float, b: float, refinement: int) -> np.ndarray:
    """Dyadic variation estimates for refinements ``0..refinement``."""
    ts = np.linspace(a, b, (1 << refinement) + 1)
    vals = A.sample(ts)
    out = []
    for r in range(refinement + 1):
        stride = 1 << (refinement - r)
        out.append(float(np.sum(spectral_norm(np.diff(vals[::stride], axis=0)))))
    return np.array(out)


def norm_integral(A: TimeDependentMatrix, a: float, b: float, tol: float = 1e-10) -> float:
    """Integral of the spectral norm of ``A`` over ``[a, b]``."""
    from scipy.integrate import quad

    if b <= a:
        return 0.0
    total = 0.0
    for lo, hi in A.pieces(a, b):
        val, _ = quad(lambda t: spectral_norm(A(t)), lo, hi, epsabs=tol, epsrel=tol, limit=200)
        total += val
    return total
