"""Block encodings as explicit unitaries.

Register order is ancilla-major: a unitary on ``m + n`` qubits is indexed as
``(ancilla, system)`` so the encoded block is the top-left ``2**n`` square.
When several ancilla registers are stacked, the one added last is the most
significant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DimensionError, InputError, PreconditionError, SubnormalizationError
from .linalg import MAX_DIM, TimeDependentMatrix, as_square, spectral_norm, svd


def _qubits(dim: int) -> int:
    n = int(round(math.log2(dim))) if dim > 0 else -1
    if n < 0 or (1 << n) != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


def _check_dim(dim: int):
    if dim > MAX_DIM:
        raise DimensionError(f"unitary dimension {dim} exceeds cap {MAX_DIM}")


@dataclass
class BlockEncoding:
    """``alpha * U[:2**n, :2**n]`` approximates ``target`` to spectral error ``eps``.

    ``target`` is optional: when absent the encoding is exact for its own
    encoded block and ``eps`` certifies the distance to an operator that is
    known only to the caller.
    """

    unitary: np.ndarray = field(repr=False)
    alpha: float
    m: int
    n: int
    eps: float = 0.0
    target: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=complex)
        size = 1 << (self.m + self.n)
        if u.shape != (size, size):
            raise DimensionError(f"unitary shape {u.shape} does not match m={self.m}, n={self.n}")
        if not self.alpha > 0:
            raise InputError(f"subnormalization must be positive, got {self.alpha}")
        if self.eps < 0:
            raise InputError("eps must be non-negative")
        self.unitary = u

    @property
    def dim(self) -> int:
        return 1 << self.n

    @property
    def block(self) -> np.ndarray:
        return self.unitary[: self.dim, : self.dim]

    @property
    def encoded(self) -> np.ndarray:
        """The operator actually encoded, ``alpha`` times the top-left block."""
        return self.alpha * self.block

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Full circuit output for input ``|0^m> (x) psi``."""
        state = np.zeros(self.unitary.shape[0], dtype=complex)
        state[: self.dim] = psi
        return self.unitary @ state


def verify(be: BlockEncoding, target) -> float:
    """Spectral distance between ``target`` and the encoded operator."""
    t = as_square(target, "target")
    if t.shape != (be.dim, be.dim):
        raise DimensionError(f"target shape {t.shape} does not match system dimension {be.dim}")
    return spectral_norm(t - be.encoded)


def dilate(A, alpha: float, target=None, eps: float = 0.0) -> BlockEncoding:
    """Exact one-ancilla encoding of ``A`` with subnormalization ``alpha``.

    With ``B = A / alpha = W S V^dagger`` the unitary is
    ``[[B, W sqrt(1 - S^2) W^dagger], [V sqrt(1 - S^2) V^dagger, -B^dagger]]``.
    """
    A = as_square(A, "A")
    n = _qubits(A.shape[0])
    _check_dim(2 * A.shape[0])
    if not alpha > 0:
        raise InputError(f"subnormalization must be positive, got {alpha}")
    norm = spectral_norm(A)
    if norm > alpha * (1 + 1e-12):
        raise SubnormalizationError(f"norm {norm} exceeds subnormalization {alpha}")
    B = A / alpha
    f = svd(B)
    comp = np.sqrt(np.clip(1.0 - f.s ** 2, 0.0, None))
    upper = (f.W * comp) @ f.W.conj().T
    lower = (f.V * comp) @ f.V.conj().T
    U = np.block([[B, upper], [lower, -B.conj().T]])
    return BlockEncoding(U, float(alpha), 1, n, eps, None if target is None else as_square(target))


def identity_encoding(n: int, m: int = 0) -> BlockEncoding:
    return BlockEncoding(np.eye(1 << (m + n), dtype=complex), 1.0, m, n, 0.0, np.eye(1 << n))


def pad_ancillas(be: BlockEncoding, extra: int) -> BlockEncoding:
    """Add ``extra`` idle ancilla qubits (as the most significant register)."""
    if extra < 0:
        raise InputError("extra must be non-negative")
    if extra == 0:
        return be
    _check_dim(be.unitary.shape[0] << extra)
    U = np.kron(np.eye(1 << extra), be.unitary)
    return replace(be, unitary=U, m=be.m + extra)


def compact(be: BlockEncoding) -> BlockEncoding:
    """Re-dilate the encoded block with a single ancilla.

    The encoded operator, subnormalization, error and target are unchanged;
    only the ancilla count drops to one.
    """
    out = dilate(be.block, 1.0)
    return replace(out, alpha=be.alpha, eps=be.eps, target=be.target)


def embed(U: np.ndarray, dims: Sequence[int], acting: Sequence[int]) -> np.ndarray:
    """Lift ``U`` acting on registers ``acting`` (in that order) to all of ``dims``."""
    dims = list(dims)
    k = len(dims)
    total = int(np.prod(dims))
    _check_dim(total)
    sub = [dims[i] for i in acting]
    rest = [i for i in range(k) if i not in acting]
    U = np.asarray(U).reshape(sub + sub)
    eye = np.eye(int(np.prod([dims[i] for i in rest])) if rest else 1).reshape(
        [dims[i] for i in rest] * 2)
    # build the operator with axes ordered (acting, rest) and then permute
    full = np.tensordot(U, eye, axes=0) if rest else U
    na, nr = len(acting), len(rest)
    out_axes = list(range(na)) + list(range(2 * na, 2 * na + nr))
    in_axes = list(range(na, 2 * na)) + list(range(2 * na + nr, 2 * na + 2 * nr))
    order = list(acting) + rest
    perm_out = [out_axes[order.index(i)] for i in range(k)]
    perm_in = [in_axes[order.index(i)] for i in range(k)]
    return np.transpose(full, perm_out + perm_in).reshape(total, total)


def product(be1: BlockEncoding, be2: BlockEncoding) -> BlockEncoding:
    """Encoding of ``A1 @ A2`` (``be2`` acts first) on ancillas ``(a1, a2)``."""
    if be1.n != be2.n:
        raise DimensionError("system sizes differ")
    A1, A2, S = 1 << be1.m, 1 << be2.m, be1.dim
    dims = [A1, A2, S]
    U = embed(be1.unitary, dims, [0, 2]) @ embed(be2.unitary, dims, [1, 2])
    eps = be1.alpha * be2.eps + be2.alpha * be1.eps + be1.eps * be2.eps
    target = None
    if be1.target is not None and be2.target is not None:
        target = be1.target @ be2.target
    return BlockEncoding(U, be1.alpha * be2.alpha, be1.m + be2.m, be1.n, eps, target)


def prep_unitary(amplitudes) -> np.ndarray:
    """A unitary whose first column is the normalised ``amplitudes``."""
    a = np.asarray(amplitudes, dtype=complex)
    norm = np.linalg.norm(a)
    if norm == 0:
        raise PreconditionError("cannot prepare the zero vector")
    a = a / norm
    phase = a[0] / abs(a[0]) if abs(a[0]) > 0 else 1.0
    w = a / phase
    v = -w.copy()
    v[0] += 1.0
    vn = np.linalg.norm(v)
    eye = np.eye(len(a), dtype=complex)
    if vn < 1e-15:
        return phase * eye
    H = eye - 2.0 * np.outer(v, v.conj()) / vn ** 2
    return phase * H


def lcu_combine(encodings: Sequence[BlockEncoding], weights: Sequence[complex]) -> BlockEncoding:
    """Encoding of ``sum_i w_i A_i`` with subnormalization ``sum_i |w_i| alpha_i``.

    The index register is prepared with amplitudes ``sqrt(|w_i| alpha_i)``;
    the phases of the weights go into the unpreparation state.
    """
    if len(encodings) == 0 or len(encodings) != len(weights):
        raise InputError("need one weight per encoding")
    n = encodings[0].n
    if any(be.n != n for be in encodings):
        raise DimensionError("system sizes differ")
    w = np.asarray(weights, dtype=complex)
    if not np.all(np.isfinite(w)):
        raise InputError("weights must be finite")
    k = len(encodings)
    mags = np.abs(w) * np.array([be.alpha for be in encodings])
    total = float(mags.sum())
    if total == 0:
        raise PreconditionError("LCU weights sum to zero")
    m = max(be.m for be in encodings)
    padded = [pad_ancillas(be, m - be.m) for be in encodings]
    idx_q = math.ceil(math.log2(k)) if k > 1 else 0
    K = 1 << idx_q
    inner = 1 << (m + n)
    _check_dim(K * inner)
    p = np.zeros(K, dtype=complex)
    p[:k] = np.sqrt(mags / total)
    phases = np.where(np.abs(w) > 0, w / np.where(np.abs(w) > 0, np.abs(w), 1), 1)
    q = p.copy()
    q[:k] = p[:k] * np.conj(phases)
    sel = np.zeros((K * inner, K * inner), dtype=complex)
    for i in range(K):
        blk = padded[i].unitary if i < k else np.eye(inner)
        sel[i * inner:(i + 1) * inner, i * inner:(i + 1) * inner] = blk
    Pu = np.kron(prep_unitary(p), np.eye(inner))
    Pv = np.kron(prep_unitary(q), np.eye(inner))
    U = Pv.conj().T @ sel @ Pu
    eps = float(sum(abs(wi) * be.eps for wi, be in zip(w, encodings)))
    target = None
    if all(be.target is not None for be in encodings):
        target = sum(wi * be.target for wi, be in zip(w, encodings))
    return BlockEncoding(U, total, m + idx_q, n, eps, target)


class MatEncoding:
    """Block-diagonal encoding of ``A`` sampled at ``2**n_q`` left endpoints.

    Block ``g`` is the one-ancilla dilation of ``A~(t_g) / alpha`` with
    ``t_g = a + (b - a) g / 2**n_q``. ``perturbation`` (a constant matrix)
    makes the sampled family ``A~ = A + perturbation`` so that input errors
    can be exercised; ``eps`` is then its norm.

    The dense unitary is only materialised on request and only below the
    dimension cap; the integrators work from the samples directly.
    """

    m = 1

    def __init__(self, A: TimeDependentMatrix, a: float, b: float, n_q: int, alpha: float,
                 perturbation=None):
        if not b > a:
            raise InputError(f"need a < b, got [{a}, {b}]")
        if n_q < 0 or n_q > 30:
            raise InputError("n_q must lie in [0, 30]")
        if not alpha > 0:
            raise InputError("alpha must be positive")
        self.family = A
        self.a, self.b = float(a), float(b)
        self.n_q = int(n_q)
        self.alpha = float(alpha)
        self.n = _qubits(A.dim)
        self.perturbation = None if perturbation is None else as_square(perturbation)
        self.eps = 0.0 if self.perturbation is None else spectral_norm(self.perturbation)

    @property
    def points(self) -> int:
        return 1 << self.n_q

    @property
    def step(self) -> float:
        return (self.b - self.a) / self.points

    @property
    def times(self) -> np.ndarray:
        return self.a + self.step * np.arange(self.points)

    def sampled(self, t: float) -> np.ndarray:
        """The sampled family ``A~`` at an arbitrary time."""
        val = self.family(t)
        return val if self.perturbation is None else val + self.perturbation

    def samples(self) -> np.ndarray:
        vals = self.family.sample(self.times)
        if self.perturbation is not None:
            vals = vals + self.perturbation
        norms = spectral_norm(vals)
        if np.max(norms) > self.alpha * (1 + 1e-12):
            raise SubnormalizationError(f"sample norm {np.max(norms)} exceeds {self.alpha}")
        return vals

    def runs(self) -> list[tuple[int, np.ndarray]]:
        """Consecutive equal samples grouped as ``(count, matrix)`` pairs."""
        out = []
        for counts, mats in self.iter_runs():
            out.extend(zip(counts.tolist(), mats))
        return out

    def iter_runs(self, chunk: int = 1 << 15):
        """Yield ``(counts, matrices)`` arrays of runs, in time order.

        Piecewise-constant families are grouped analytically from their
        breakpoints, so the number of samples never has to be materialised.
        Other families are sampled ``chunk`` points at a time.
        """
        if self.family.piecewise_constant:
            cuts = [0]
            for p in self.family.breakpoints:
                if self.a < p < self.b:
                    cuts.append(int(math.ceil((p - self.a) / self.step - 1e-12)))
            cuts.append(self.points)
            cuts = sorted(set(c for c in cuts if 0 <= c <= self.points))
            counts, mats = [], []
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                if hi > lo:
                    mat = self.sampled(self.a + lo * self.step)
                    if spectral_norm(mat) > self.alpha * (1 + 1e-12):
                        raise SubnormalizationError("sample norm exceeds subnormalization")
                    counts.append(hi - lo)
                    mats.append(mat)
            yield np.array(counts), np.stack(mats)
            return
        for start in range(0, self.points, chunk):
            idx = np.arange(start, min(start + chunk, self.points))
            vals = self.family.sample(self.a + self.step * idx)
            if self.perturbation is not None:
                vals = vals + self.perturbation
            norms = spectral_norm(vals)
            if np.max(norms) > self.alpha * (1 + 1e-12):
                raise SubnormalizationError(f"sample norm {np.max(norms)} exceeds {self.alpha}")
            change = np.flatnonzero(np.any(np.diff(vals, axis=0) != 0, axis=(1, 2))) + 1
            starts = np.concatenate([[0], change])
            ends = np.concatenate([change, [len(vals)]])
            yield ends - starts, vals[starts]

    @property
    def unitary(self) -> np.ndarray:
        size = self.points << (self.m + self.n)
        _check_dim(size)
        inner = 1 << (self.m + self.n)
        U = np.zeros((size, size), dtype=complex)
        for g, mat in enumerate(self.samples()):
            U[g * inner:(g + 1) * inner, g * inner:(g + 1) * inner] = dilate(mat, self.alpha).unitary
        return U


def build_mat_encoding(A: TimeDependentMatrix, a: float, b: float, n_q: int, alpha: float,
                       perturbation=None) -> MatEncoding:
    return MatEncoding(A, a, b, n_q, alpha, perturbation)


def riemann_mean(me: MatEncoding) -> np.ndarray:
    """``(1/M) sum_g A~(t_g)``, accumulated run by run."""
    total = np.zeros((me.family.dim, me.family.dim), dtype=complex)
    for counts, mats in me.iter_runs():
        total += np.tensordot(counts.astype(float), mats, axes=1)
    return total / me.points


LITERAL_AVERAGE_DIM = 1024


def _hadamard_axes(T: np.ndarray, axes: Sequence[int], q: int) -> np.ndarray:
    """Apply ``H^{(x) q}`` along each listed axis of length ``2**q``."""
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    for ax in axes:
        shape = T.shape
        T = np.moveaxis(T, ax, 0).reshape((2,) * q + (-1,))
        for j in range(q):
            T = np.tensordot(h, T, axes=([1], [j]))
            T = np.moveaxis(T, 0, j)
        T = np.moveaxis(T.reshape((shape[ax],) + tuple(np.delete(shape, ax))), 0, ax)
    return T


def riemann_sum_encoding(me: MatEncoding) -> BlockEncoding:
    """Encoding of the sample average, subnormalization ``alpha``.

    Conjugating the index register of the block-diagonal encoding with
    Hadamards averages the blocks. That unitary is built literally when it
    has at most ``LITERAL_AVERAGE_DIM`` rows; above that the same block is
    returned as a one-ancilla dilation.
    """
    mean = riemann_mean(me)
    inner = 1 << (me.m + me.n)
    size = me.points * inner
    if size > LITERAL_AVERAGE_DIM:
        return dilate(mean, me.alpha, target=mean)
    U = me.unitary.reshape(me.points, inner, me.points, inner)
    U = _hadamard_axes(U, [0, 2], me.n_q).reshape(size, size)
    # registers are (index, ancilla, system); the encoding wants the index
    # among the ancillas, which it already is (most significant)
    return BlockEncoding(U, me.alpha, me.m + me.n_q, me.n, 0.0, mean)
