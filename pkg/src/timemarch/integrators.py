"""Short-time propagator encodings and their a-priori error bounds.

Two integrators are provided for a segment ``[a, b]`` with ``(b - a) alpha <= 1/2``:

* a truncated Dyson series built from the sampled family, and
* a first-order Magnus step, ``exp`` of the Riemann-sum integral, where the
  exponential is realised by a trapezoid-discretized Cauchy integral over
  resolvents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, quad_vec

from .block_encoding import (
    BlockEncoding,
    MatEncoding,
    _check_dim,
    compact,
    dilate,
    embed,
    prep_unitary,
    riemann_sum_encoding,
)
from .errors import InputError, PreconditionError
from .linalg import (
    TimeDependentMatrix,
    commutator,
    matrix_exp,
    norm_integral,
    spectral_norm,
)
from .svt import CostReport, invert

SQRT_E = math.exp(0.5)
_CHUNK = 1 << 14


@dataclass(frozen=True)
class DysonConfig:
    K: int
    n_q: int

    def __post_init__(self):
        if self.K < 1:
            raise InputError("Dyson truncation order must be at least 1")
        if self.n_q < 0:
            raise InputError("n_q must be non-negative")


@dataclass(frozen=True)
class MagnusConfig:
    n_q: int
    beta0: float | None = None

    def __post_init__(self):
        if self.n_q < 0:
            raise InputError("n_q must be non-negative")

    @property
    def M(self) -> int:
        return 1 << self.n_q


@dataclass(frozen=True)
class ContourConfig:
    """Trapezoid rule on the circle of radius ``beta`` (``2 alpha`` when omitted).

    ``K`` may be omitted, in which case the smallest count whose trapezoid
    bound is at most ``eps / 2`` is used.
    """

    eps: float
    K: int | None = None
    beta: float | None = None

    def __post_init__(self):
        if not self.eps > 0:
            raise InputError("contour eps must be positive")
        if self.K is not None and self.K < 2:
            raise InputError("need at least two contour points")


# -- Dyson --------------------------------------------------------------------

def _graded_exp(mats: np.ndarray, h: np.ndarray, K: int) -> np.ndarray:
    """Stack of ``[(h A)^k / k!]_{k<K}`` for each matrix in ``mats``."""
    B, n, _ = mats.shape
    out = np.empty((B, K, n, n), dtype=complex)
    out[:, 0] = np.eye(n)
    step = mats * np.asarray(h, dtype=float).reshape(-1, 1, 1)
    for k in range(1, K):
        out[:, k] = out[:, k - 1] @ step / k
    return out


def _graded_mul(later: np.ndarray, earlier: np.ndarray) -> np.ndarray:
    """Product of truncated power series in the grading variable."""
    K = later.shape[1]
    out = np.zeros_like(later)
    for k in range(K):
        for i in range(k + 1):
            out[:, k] += later[:, i] @ earlier[:, k - i]
    return out


def _graded_product(stack: np.ndarray) -> np.ndarray:
    """Time-ordered product (index 0 earliest) via a reduction tree."""
    while len(stack) > 1:
        if len(stack) % 2:
            stack = np.concatenate([_graded_mul(stack[1:-1:2], stack[0:-1:2]), stack[-1:]])
        else:
            stack = _graded_mul(stack[1::2], stack[0::2])
    return stack[0]


def dyson_matrix(me: MatEncoding, K: int) -> np.ndarray:
    """Truncated Dyson sum of the left-endpoint piecewise-constant interpolant.

    Order ``k`` is the ordered ``k``-fold integral of the sampled family over
    the simplex; coinciding cells are weighted exactly, so a constant family
    gives the Taylor partial sum of ``exp(A (b - a))``.
    """
    n = me.family.dim
    parts = []
    for counts, mats in me.iter_runs(_CHUNK):
        parts.append(_graded_product(_graded_exp(mats, counts * me.step, K)))
    total = _graded_product(np.stack(parts))
    return total.sum(axis=0).reshape(n, n)


@dataclass(frozen=True)
class DysonBound:
    """Pieces of the Dyson error bound; ``total`` is their sum."""

    truncation: float
    truncation_remainder: float
    quadrature: float
    input: float

    @property
    def total(self) -> float:
        return self.truncation + self.truncation_remainder + self.quadrature + self.input

    def __float__(self) -> float:
        return self.total


def dyson_error_bound(A: TimeDependentMatrix, a: float, b: float, cfg: DysonConfig,
                      mat_eps: float = 0.0) -> DysonBound:
    """A-priori bound on ``||truncated Dyson matrix - propagator||``.

    ``truncation`` is ``x^K / K!`` with ``x`` the integral of ``||A||``, and
    ``truncation_remainder`` is the rest of the exponential tail beyond it.
    The quadrature term bounds the switch to left-endpoint samples order
    by order through the total variation. The input term covers a sampled
    family within ``mat_eps`` of ``A``.
    """
    if not b > a:
        raise InputError("need a < b")
    h = b - a
    K = cfg.K
    x = norm_integral(A, a, b)
    trunc = x ** K / math.factorial(K)
    remainder = _exp_tail(x, K + 1)
    step = h / (1 << cfg.n_q)
    V = A.variation(a, b) if step > 0 else 0.0
    c = 2 * A.alpha * h
    quadrature = step * V * sum(c ** (k - 1) / math.factorial(k - 1) for k in range(1, K))
    inp = math.exp(h * (A.alpha + mat_eps)) * h * mat_eps
    return DysonBound(trunc, remainder, quadrature, inp)


def _exp_tail(x: float, start: int) -> float:
    """``sum_{k >= start} x^k / k!`` summed directly (no cancellation)."""
    term = x ** start / math.factorial(start)
    total, k = 0.0, start
    while term > 0 and (term > 1e-17 * total or k <= x):
        total += term
        k += 1
        term *= x / k
    return total


def _check_short(alpha: float, a: float, b: float):
    if (b - a) * alpha > 0.5 + 1e-12:
        raise PreconditionError(f"step {(b - a):.4g} exceeds 1/(2 alpha) = {0.5 / alpha:.4g}")


def dyson_short(me: MatEncoding, cfg: DysonConfig) -> tuple[BlockEncoding, CostReport]:
    """Encoding of the truncated Dyson matrix with subnormalization ``e^{1/2}``.

    The returned encoding's ``eps`` is the a-priori bound against the true
    propagator of ``me.family``; its encoded block is exact for the
    truncated sum.
    """
    if cfg.n_q != me.n_q:
        raise InputError("config and encoding disagree on n_q")
    _check_short(me.alpha, me.a, me.b)
    D = dyson_matrix(me, cfg.K)
    bound = dyson_error_bound(me.family, me.a, me.b, cfg, me.eps)
    be = dilate(D, SQRT_E)
    be.eps = bound.total
    cost = CostReport(cfg.K, 1, 0, {"bound": bound, "n_q": cfg.n_q})
    return be, cost


# -- Magnus -------------------------------------------------------------------

@dataclass(frozen=True)
class MagnusBound:
    commutator: float
    variation: float

    @property
    def total(self) -> float:
        return self.commutator + self.variation

    def __float__(self) -> float:
        return self.total


def _commutator_integral(A: TimeDependentMatrix, a: float, b: float, tol: float) -> float:
    """``int_a^b || [int_a^tau A, A(tau)] || dtau`` by nested adaptive quadrature."""
    cuts = [p for p in A.breakpoints if a < p < b]

    def inner(tau: float) -> np.ndarray:
        total = np.zeros((A.dim, A.dim), dtype=complex)
        edges = [a] + [p for p in cuts if p < tau] + [tau]
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi > lo:
                val, _ = quad_vec(lambda s: A(s), lo, hi, epsabs=tol * 1e-3, epsrel=1e-12)
                total += val
        return total

    def outer(tau: float) -> float:
        return spectral_norm(commutator(inner(tau), A(tau)))

    total = 0.0
    edges = [a] + cuts + [b]
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = quad(outer, lo, hi, epsabs=tol, epsrel=1e-10, limit=200)
        total += val
    return total


def magnus_error_bound(A: TimeDependentMatrix, a: float, b: float, M: int,
                       tol: float = 1e-8) -> MagnusBound:
    """Bound on ``|| exp(Riemann sum) - propagator ||`` for ``M`` left-endpoint samples."""
    if M < 1:
        raise InputError("M must be at least 1")
    x = norm_integral(A, a, b, tol=tol)
    comm = 0.5 * _commutator_integral(A, a, b, tol) * math.exp(x)
    # quadrature noise can leave a tiny positive value for commuting families
    comm = comm + tol if comm > tol else comm
    step_v = (b - a) / M * A.variation(a, b)
    return MagnusBound(comm, step_v * math.exp(x + step_v))


def magnus1_short(me: MatEncoding, cfg: MagnusConfig,
                  contour: ContourConfig) -> tuple[BlockEncoding, CostReport]:
    """Encoding of ``exp`` of the Riemann-sum integral of the segment.

    The Riemann-sum encoding (subnormalization ``alpha``) is rescaled to
    subnormalization ``alpha (b - a)`` and passed to ``contour_exp``.
    The returned ``eps`` adds the contour error, the discretization bound and
    the effect of a perturbed input family.
    """
    if cfg.n_q != me.n_q:
        raise InputError("config and encoding disagree on n_q")
    _check_short(me.alpha, me.a, me.b)
    h = me.b - me.a
    avg = riemann_sum_encoding(me)
    scaled = compact(avg)
    scaled = BlockEncoding(scaled.unitary, me.alpha * h, scaled.m, scaled.n, 0.0,
                           h * avg.target if avg.target is not None else None)
    out, cost = contour_exp(scaled, contour)
    bound = magnus_error_bound(me.family, me.a, me.b, me.points)
    inp = h * me.eps * math.exp(h * (me.alpha + me.eps))
    beta0 = cfg.beta0 if cfg.beta0 is not None else h * h * me.alpha ** 2 / 2
    out.eps = out.eps + bound.total + inp
    out.target = None
    cost.notes.update({"magnus_bound": bound, "beta0": beta0,
                       "delta_prime": cost.notes["contour_eps"] + 4 * beta0})
    return out, cost


# -- contour exponential ------------------------------------------------------

def trapezoid_bound(normA: float, beta: float, R: float, K: int, supf: float) -> float:
    """Trapezoid-rule error bound for ``f(A)`` on the circle of radius ``beta``.

    ``f`` must be analytic on the disc of radius ``R`` with sup ``supf`` there.
    """
    if not 0 <= normA < beta < R:
        raise InputError("need ||A|| < beta < R")
    if K < 1:
        raise InputError("K must be positive")
    r1 = (normA / beta) ** K
    r2 = (beta / R) ** K
    return supf / (1 - normA / R) * (r1 / (1 - r1) + r2 / (1 - r2))


def contour_nodes(alpha: float, K: int, beta: float | None = None) -> np.ndarray:
    beta = 2 * alpha if beta is None else beta
    return beta * np.exp(2j * np.pi * np.arange(K) / K)


def contour_weight(alpha: float, K: int, beta: float | None = None) -> float:
    """``(1/K) sum_k |e^{z_k} z_k|`` over the ``K`` nodes."""
    z = contour_nodes(alpha, K, beta)
    return float(np.mean(np.abs(np.exp(z) * z)))


def choose_contour_points(alpha: float, eps: float, beta: float | None = None) -> int:
    """Smallest ``K`` whose trapezoid bound (with ``R = 2 beta``) is at most ``eps``."""
    beta = 2 * alpha if beta is None else beta
    R = 2 * beta
    for K in range(2, 100000):
        if trapezoid_bound(alpha, beta, R, K, math.exp(R)) <= eps:
            return K
    raise PreconditionError("no contour size meets the tolerance")


def trapezoid_exp(A: np.ndarray, K: int, beta: float) -> np.ndarray:
    """Direct trapezoid approximation ``(1/K) sum_k e^{z_k} z_k (z_k - A)^{-1}``."""
    n = A.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for z in beta * np.exp(2j * np.pi * np.arange(K) / K):
        out += np.exp(z) * z * np.linalg.inv(z * np.eye(n) - A)
    return out / K


def contour_exp(be_A: BlockEncoding, cfg: ContourConfig) -> tuple[BlockEncoding, CostReport]:
    """Encoding of ``exp(A)`` from an exact encoding of ``A``.

    The resolvents ``(z_k - A)^{-1}`` are produced together by inverting a
    block-diagonal encoding of ``sum_k |k><k| (z_k - A)``, and then combined
    with weights ``e^{z_k} z_k`` by preparing the index register.
    """
    if be_A.eps != 0:
        raise PreconditionError("contour_exp needs an exact encoding")
    alpha = be_A.alpha
    beta = 2 * alpha if cfg.beta is None else cfg.beta
    A = be_A.encoded
    if spectral_norm(A) >= beta:
        raise PreconditionError("contour radius must exceed ||A||")
    R = 2 * beta
    K = cfg.K if cfg.K is not None else choose_contour_points(alpha, cfg.eps / 2, beta)
    trap = trapezoid_bound(alpha, beta, R, K, math.exp(R)) if alpha < beta else math.inf
    base = compact(be_A) if be_A.m > 1 else be_A
    mA, n = base.m, base.n
    kq = max(1, math.ceil(math.log2(K)))
    Kp = 1 << kq
    z = np.full(Kp, beta, dtype=complex)
    z[:K] = contour_nodes(alpha, K, beta)
    # select: registers (flag, ancA, index, system)
    dims = [2, 1 << mA, Kp, 1 << n]
    _check_dim(4 * int(np.prod(dims)))
    prep = np.zeros((Kp, 2, Kp, 2), dtype=complex)
    prep_dag = np.zeros_like(prep)
    for k in range(Kp):
        norm = math.sqrt(beta + alpha)
        u = prep_unitary(np.array([np.sqrt(z[k]), math.sqrt(alpha)]) / norm)
        v = prep_unitary(np.array([np.conj(np.sqrt(z[k])), -math.sqrt(alpha)]) / norm)
        prep[k, :, k, :] = u
        prep_dag[k, :, k, :] = v.conj().T
    # reorder (index, flag) -> (flag, index) so embed sees the register order
    prep = prep.transpose(1, 0, 3, 2).reshape(2 * Kp, 2 * Kp)
    prep_dag = prep_dag.transpose(1, 0, 3, 2).reshape(2 * Kp, 2 * Kp)
    proj1 = np.diag([0.0, 1.0]).astype(complex)
    cU = (np.kron(np.diag([1.0, 0.0]), np.eye(base.unitary.shape[0]))
          + np.kron(proj1, base.unitary))
    sel = (embed(prep_dag, dims, [0, 2]) @ embed(cU, dims, [0, 1, 3]) @ embed(prep, dims, [0, 2]))
    xi = BlockEncoding(sel, beta + alpha, 1 + mA, kq + n, 0.0)
    weight = contour_weight(alpha, K, beta)
    eps_inv = cfg.eps / (2 * weight)
    inv, inv_cost = invert(xi, eps_inv, 1.0 / (beta - alpha))
    # the index register now sits directly above the system, so it can be
    # treated as the least significant ancilla register
    coef = np.zeros(Kp, dtype=complex)
    coef[:K] = np.sqrt(np.exp(z[:K]) * z[:K])
    P = prep_unitary(coef)
    Pc = prep_unitary(coef.conj())
    outer = 1 << inv.m
    left = np.kron(np.eye(outer), np.kron(Pc.conj().T, np.eye(1 << n)))
    right = np.kron(np.eye(outer), np.kron(P, np.eye(1 << n)))
    U = left @ inv.unitary @ right
    alpha_out = 4 * weight / (3 * (beta - alpha))
    eps = trap + weight * eps_inv
    out = BlockEncoding(U, alpha_out, inv.m + kq, n, eps, matrix_exp(A))
    cost = CostReport(inv_cost.queries_to_input, out.m - be_A.m, inv_cost.degree,
                      {"K": K, "contour_weight": weight, "trapezoid_bound": trap,
                       "contour_eps": eps, "inverse_eps": eps_inv})
    return out, cost


# -- commutators --------------------------------------------------------------

def commutator_norm_sup(A: TimeDependentMatrix, grid: int) -> float:
    """Largest ``||[A(s), A(t)]||`` over sample pairs.

    Samples are the dyadic grid with at least ``grid`` points plus the
    midpoint of every piece between breakpoints, so refining never drops a
    sample and the estimate cannot decrease.
    """
    if grid < 2:
        raise InputError("grid must have at least two points")
    level = math.ceil(math.log2(grid - 1))
    ts = np.linspace(0.0, A.T, (1 << level) + 1)
    edges = [0.0] + list(A.breakpoints) + [A.T]
    mids = [(lo + hi) / 2 for lo, hi in zip(edges[:-1], edges[1:])]
    ts = np.unique(np.concatenate([ts, mids]))
    S = A.sample(ts)
    best = 0.0
    for i in range(len(S)):
        C = np.einsum("ij,bjk->bik", S[i], S[i + 1:]) - np.einsum("bij,jk->bik", S[i + 1:], S[i])
        if len(C):
            best = max(best, float(np.max(spectral_norm(C))))
    return best
