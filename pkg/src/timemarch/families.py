"""Built-in coefficient families, looked up by name.

Every constructor takes the horizon ``T`` plus keyword parameters and
returns a :class:`TimeDependentMatrix` with a declared norm bound and a
variation accessor (analytic where the family allows it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError
from .linalg import TimeDependentMatrix, spectral_norm

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def constant(M, T: float, name: str = "constant") -> TimeDependentMatrix:
    M = np.asarray(M, dtype=complex)
    return TimeDependentMatrix(
        lambda t: M, spectral_norm(M), T,
        batch=lambda ts: np.broadcast_to(M, (len(ts),) + M.shape).copy(),
        variation=lambda a, b: 0.0, piecewise_constant=True, name=name)


def piecewise(mats, cuts, T: float, name: str = "piecewise") -> TimeDependentMatrix:
    """``mats[j]`` on ``[cuts[j-1], cuts[j])``, right-continuous at each cut."""
    mats = [np.asarray(m, dtype=complex) for m in mats]
    cuts = [float(c) for c in cuts]
    if len(mats) != len(cuts) + 1:
        raise InputError("need one more matrix than cut points")
    if any(not 0 < c < T for c in cuts) or cuts != sorted(cuts):
        raise InputError("cut points must be increasing and inside (0, T)")
    stack = np.stack(mats)
    jumps = [spectral_norm(mats[j + 1] - mats[j]) for j in range(len(cuts))]

    def batch(ts):
        return stack[np.searchsorted(cuts, np.asarray(ts), side="right")]

    def variation(a, b):
        return float(sum(j for c, j in zip(cuts, jumps) if a < c <= b))

    def norm_bound(a, b):
        lo = np.searchsorted(cuts, a, side="right")
        hi = np.searchsorted(cuts, b, side="right")
        return max(spectral_norm(mats[j]) for j in range(lo, hi + 1))

    alpha = max(spectral_norm(m) for m in mats)
    return TimeDependentMatrix(lambda t: batch([t])[0], alpha, T, batch=batch,
                               variation=variation, breakpoints=cuts,
                               piecewise_constant=True, norm_bound=norm_bound, name=name)


def zero(T: float, dim: int = 2) -> TimeDependentMatrix:
    return constant(np.zeros((dim, dim)), T, "zero")


def kappa_v(T: float, delta: float = 1e-3) -> TimeDependentMatrix:
    """Nearly defective ``[[1, 1], [0, 1 + delta]]``: eigenvectors almost parallel."""
    return constant([[1, 1], [0, 1 + delta]], T, "kappa_v")


def jordan(T: float) -> TimeDependentMatrix:
    """Jordan block ``[[i, 1], [0, i]]``: propagator norm grows only linearly."""
    return constant([[1j, 1], [0, 1j]], T, "jordan")


def search(T: float, qubits: int = 2, marked: int | None = None) -> TimeDependentMatrix:
    """Minus the phase oracle that flips the sign of one marked basis state."""
    N = 1 << qubits
    marked = N - 1 if marked is None else marked
    if not 0 <= marked < N:
        raise InputError("marked index out of range")
    diag = -np.ones(N)
    diag[marked] = 1.0
    return constant(np.diag(diag), T, "search")


def hamiltonian(T: float, qubits: int = 1, scale: float = 1.0, seed: int = 7) -> TimeDependentMatrix:
    """Constant ``-i H`` with a seeded random Hermitian ``H`` of norm ``scale``."""
    rng = np.random.default_rng(seed)
    N = 1 << qubits
    G = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    H = (G + G.conj().T) / 2
    H *= scale / spectral_norm(H)
    return constant(-1j * H, T, "hamiltonian")


def decay(T: float, rates=(0.5, 1.0)) -> TimeDependentMatrix:
    return constant(-np.diag(np.asarray(rates, dtype=float)), T, "decay")


def rotating(T: float, omega: float = 1.0, scale: float = 1.0) -> TimeDependentMatrix:
    """``-i scale (cos(w t) X + sin(w t) Z)``: unitary, smooth, non-commuting.

    ``cos X + sin Z`` squares to the identity, so ``||A(t)|| = scale`` and the
    variation over ``[a, b]`` is exactly ``scale * w * (b - a)``.
    """
    def batch(ts):
        ts = np.asarray(ts, dtype=float)[:, None, None]
        return -1j * scale * (np.cos(omega * ts) * X + np.sin(omega * ts) * Z)

    return TimeDependentMatrix(lambda t: batch([t])[0], abs(scale), T, batch=batch,
                               variation=lambda a, b: abs(scale * omega) * (b - a),
                               name="rotating")


def commuting(T: float, omega: float = 2.0) -> TimeDependentMatrix:
    """``f(t) B`` with ``f(t) = 0.75 + 0.25 cos(w t)`` and a fixed non-normal ``B``."""
    B = np.array([[-0.6, 0.4], [0.0, -0.2]], dtype=complex)
    nB = spectral_norm(B)

    def f(ts):
        return 0.75 + 0.25 * np.cos(omega * np.asarray(ts, dtype=float))

    def variation(a, b):
        # integral of |f'| = 0.25 w |sin(w t)|, done exactly over monotone pieces
        ks = np.arange(math.ceil(omega * a / math.pi), math.floor(omega * b / math.pi) + 1)
        pts = np.concatenate([[a], ks * math.pi / omega, [b]]) if omega > 0 else np.array([a, b])
        pts = np.clip(np.sort(pts), a, b)
        return float(np.sum(np.abs(np.diff(f(pts))))) * nB

    return TimeDependentMatrix(lambda t: f(t) * B, nB, T,
                               batch=lambda ts: f(ts)[:, None, None] * B,
                               variation=variation, name="commuting")


def linear(T: float) -> TimeDependentMatrix:
    """``[[0, t], [1, 0]]``: norm ``max(1, t)``, derivative norm 1."""
    def batch(ts):
        ts = np.asarray(ts, dtype=float)
        out = np.zeros((len(ts), 2, 2), dtype=complex)
        out[:, 0, 1] = ts
        out[:, 1, 0] = 1.0
        return out

    return TimeDependentMatrix(lambda t: batch([t])[0], max(1.0, T), T, batch=batch,
                               variation=lambda a, b: b - a,
                               norm_bound=lambda a, b: max(1.0, b), name="linear")


def ramp(T: float, scale: float = 1.0) -> TimeDependentMatrix:
    """``(t / T) B`` with ``||B|| = scale``: norm grows linearly from zero."""
    B = scale * np.array([[-0.5, 1.0], [-1.0, -0.5]], dtype=complex) / spectral_norm(
        np.array([[-0.5, 1.0], [-1.0, -0.5]]))
    return TimeDependentMatrix(lambda t: (t / T) * B, scale, T,
                               batch=lambda ts: (np.asarray(ts, dtype=float) / T)[:, None, None] * B,
                               variation=lambda a, b: scale * (b - a) / T,
                               norm_bound=lambda a, b: scale * b / T, name="ramp")


def jump(T: float, qubits: int = 1) -> TimeDependentMatrix:
    """Piecewise-constant dissipative/oscillatory family with two jumps.

    The jumps sit at ``T/3`` and ``0.7 T``, which are not dyadic fractions of
    ``T``, so uniform grids never land on them exactly.
    """
    if qubits == 1:
        mats = [np.array([[-0.4, 0.3], [0.0, -0.1]]),
                -1j * 0.8 * X,
                np.array([[-0.2, 0.0], [0.5, -0.6]]) + 0.3j * Z]
    else:
        A1 = np.kron(np.array([[-0.4, 0.3], [0.0, -0.1]]), I2)
        A2 = -1j * 0.5 * (np.kron(X, I2) + np.kron(Z, Z))
        A3 = np.kron(I2, np.array([[-0.2, 0.0], [0.5, -0.6]])) + 0.2j * np.kron(Z, X)
        mats = [A1, A2, A3]
    return piecewise(mats, [T / 3, 0.7 * T], T, "jump")


@dataclass(frozen=True)
class FamilyInfo:
    build: Callable[..., TimeDependentMatrix]
    params: dict
    summary: str


REGISTRY: dict[str, FamilyInfo] = {
    "zero": FamilyInfo(zero, {"dim": 2}, "A = 0"),
    "kappa_v": FamilyInfo(kappa_v, {"delta": 1e-3}, "[[1, 1], [0, 1 + delta]]"),
    "jordan": FamilyInfo(jordan, {}, "[[i, 1], [0, i]]"),
    "search": FamilyInfo(search, {"qubits": 2, "marked": None}, "minus a marking oracle"),
    "hamiltonian": FamilyInfo(hamiltonian, {"qubits": 1, "scale": 1.0, "seed": 7}, "-i H, H random Hermitian"),
    "decay": FamilyInfo(decay, {"rates": (0.5, 1.0)}, "-diag(rates)"),
    "rotating": FamilyInfo(rotating, {"omega": 1.0, "scale": 1.0}, "-i s (cos wt X + sin wt Z)"),
    "commuting": FamilyInfo(commuting, {"omega": 2.0}, "f(t) B"),
    "linear": FamilyInfo(linear, {}, "[[0, t], [1, 0]]"),
    "ramp": FamilyInfo(ramp, {"scale": 1.0}, "(t/T) B"),
    "jump": FamilyInfo(jump, {"qubits": 1}, "piecewise constant with two jumps"),
}


def make_family(name: str, T: float, **params) -> TimeDependentMatrix:
    """Build a registered family; unknown parameters are rejected."""
    if name not in REGISTRY:
        raise InputError(f"unknown family {name!r}; known: {', '.join(sorted(REGISTRY))}")
    info = REGISTRY[name]
    unknown = set(params) - set(info.params)
    if unknown:
        raise InputError(f"family {name!r} has no parameter(s) {sorted(unknown)}")
    return info.build(T, **params)
