"""Counter-register compression of a chain of block encodings.

A counter starts at ``L`` and is decremented (coherently) each time a
segment leaves its ancillas in the all-zero state. Post-selecting the
counter and the ancillas on zero then picks out the product of the encoded
blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .block_encoding import BlockEncoding, _check_dim, pad_ancillas
from .errors import DimensionError, InputError, PreconditionError
from .linalg import spectral_norm
from .svt import CostReport, uniform_amplify


def add_unitary(size: int) -> np.ndarray:
    """Cyclic increment ``|c> -> |c + 1 mod 2**size>``."""
    if size < 1:
        raise InputError("the counter needs at least one qubit")
    return np.roll(np.eye(1 << size), 1, axis=0)


def counter_qubits(L: int) -> int:
    """Qubits for a counter modulo the smallest power of two that is at least ``2L``."""
    return math.ceil(math.log2(L)) + 1 if L > 1 else 1


@dataclass
class GadgetCircuit:
    """The assembled compression circuit and its register sizes."""

    unitary: np.ndarray = field(repr=False)
    counter: int
    ancillas: int
    n: int

    def encoding(self, alpha: float, target=None) -> BlockEncoding:
        return BlockEncoding(self.unitary, alpha, self.counter + self.ancillas, self.n, 0.0, target)


def assemble(encodings: list[BlockEncoding]) -> GadgetCircuit:
    """Build the counter circuit for a chain (first element acts first).

    Registers from most to least significant are (counter, ancilla, system).
    The unitary is obtained by pushing the identity through the gate sequence,
    which keeps each step a cheap structured update.
    """
    if not encodings:
        raise InputError("nothing to compress")
    n = encodings[0].n
    if any(be.n != n for be in encodings):
        raise DimensionError("system sizes differ")
    L = len(encodings)
    c = counter_qubits(L)
    m = max(be.m for be in encodings)
    C, inner = 1 << c, 1 << (m + n)
    _check_dim(C * inner)
    S = 1 << n
    U = np.eye(C * inner, dtype=complex).reshape(C, inner, C * inner)
    U = np.roll(U, L, axis=0)  # ADD^L
    for be in encodings:
        V = pad_ancillas(be, m - be.m).unitary
        U = np.einsum("ij,cjk->cik", V, U)
        # decrement the counter where the ancillas are all zero
        U[:, :S, :] = np.roll(U[:, :S, :], -1, axis=0)
    return GadgetCircuit(U.reshape(C * inner, C * inner), c, m, n)


def compress(encodings: list[BlockEncoding]) -> BlockEncoding:
    """Exact encoding of ``G_L ... G_1`` from exact encodings of the ``G_l``.

    The subnormalization is the product of the inputs' and the ancilla count
    is ``max m_l + ceil(log2 L) + 1``.
    """
    for be in encodings:
        if be.eps != 0:
            raise PreconditionError("compress expects exact encodings (eps = 0)")
    circuit = assemble(encodings)
    alpha = float(np.prod([be.alpha for be in encodings]))
    target = None
    if all(be.target is not None for be in encodings):
        target = encodings[0].target
        for be in encodings[1:]:
            target = be.target @ target
    return circuit.encoding(alpha, target)


@dataclass
class Composition:
    """Result of amplifying every segment and compressing the chain."""

    encoding: BlockEncoding
    cost: CostReport
    delta: float
    eps_prime: float
    segment_errors: list[float]
    segment_norms: list[float]
    amplified_norms: list[float]
    degrees: list[int]

    @property
    def L(self) -> int:
        return len(self.segment_norms)

    @property
    def P(self) -> float:
        return float(np.prod(self.segment_norms))

    @property
    def alpha_band(self) -> tuple[float, float]:
        scale = self.P / (1 - self.delta) ** self.L
        return scale / 2, math.exp(0.5) * scale

    @property
    def eps_comp(self) -> float:
        return math.exp(0.5) * (self.L * self.eps_prime + sum(self.segment_errors)) * self.P


def long_time_compose(encodings: list[BlockEncoding], delta: float | None = None,
                      eps_prime: float | None = None, max_degree: int = 2001) -> Composition:
    """Amplify each segment uniformly, then compress the chain.

    Each input encodes a matrix close to a segment propagator. Its ``eps``
    is the certified distance to that propagator, and its ``target`` (when
    present) is the propagator itself. The encoded block is treated as exact,
    so it is the operator that gets amplified.
    """
    L = len(encodings)
    if L == 0:
        raise InputError("nothing to compose")
    delta = 1.0 / (2 * L) if delta is None else delta
    eps_prime = 1.0 / (2 * L) if eps_prime is None else eps_prime
    if not 0 < eps_prime <= 1.0 / (2 * L) + 1e-15:
        raise PreconditionError("eps_prime must lie in (0, 1/(2L)]")
    norms, rel_errors = [], []
    for be in encodings:
        enc_norm = spectral_norm(be.encoded)
        if be.target is not None:
            true_norm = spectral_norm(be.target)
        else:
            # only the encoded block is known; this lower bound keeps the
            # relative error conservative
            true_norm = enc_norm - be.eps
        if true_norm <= 0:
            raise PreconditionError("segment error swamps the segment norm")
        norms.append(true_norm)
        rel_errors.append(be.eps / true_norm)
    if sum(rel_errors) > 0.5:
        raise PreconditionError(f"sum of relative segment errors {sum(rel_errors):.3g} exceeds 1/2")
    amplified, degrees, amp_norms = [], [], []
    for be in encodings:
        exact = BlockEncoding(be.unitary, be.alpha, be.m, be.n, 0.0, be.encoded)
        res = uniform_amplify(exact, delta, eps_prime, max_degree)
        enc = res.encoding
        amplified.append(BlockEncoding(enc.unitary, enc.alpha, enc.m, enc.n, 0.0, enc.encoded))
        degrees.append(res.cost.degree)
        amp_norms.append(spectral_norm(exact.encoded))
    out = compress(amplified)
    true_targets = [be.target for be in encodings]
    target = None
    if all(t is not None for t in true_targets):
        target = true_targets[0]
        for t in true_targets[1:]:
            target = t @ target
    comp = Composition(out, CostReport(sum(degrees), out.m - max(be.m for be in encodings)),
                       delta, eps_prime, rel_errors, norms, amp_norms, degrees)
    comp.encoding = BlockEncoding(out.unitary, out.alpha, out.m, out.n, comp.eps_comp, target)
    comp.cost.notes["degrees"] = degrees
    return comp
