import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timemarch.block_encoding import dilate, verify
from timemarch.errors import InputError, PreconditionError
from timemarch.gadget import add_unitary, assemble, compress, counter_qubits, long_time_compose
from timemarch.linalg import is_unitary, matrix_exp, spectral_norm

from conftest import random_contraction, random_matrix, random_unitary


def chain(mats):
    out = np.eye(mats[0].shape[0], dtype=complex)
    for M in mats:
        out = M @ out
    return out


class TestAddUnitary:
    def test_one_qubit_is_x(self):
        assert np.array_equal(add_unitary(1), np.array([[0, 1], [1, 0]]))

    def test_wraparound(self):
        U = add_unitary(3)
        e7 = np.zeros(8)
        e7[7] = 1
        assert np.argmax(U @ e7) == 0

    def test_order(self):
        U = add_unitary(2)
        assert np.allclose(np.linalg.matrix_power(U, 4), np.eye(4))
        assert not np.allclose(np.linalg.matrix_power(U, 2), np.eye(4))

    def test_rejects_zero(self):
        with pytest.raises(InputError):
            add_unitary(0)


@pytest.mark.parametrize("L, c", [(1, 1), (2, 2), (3, 3), (4, 3), (5, 4), (8, 4), (9, 5)])
def test_counter_size(L, c):
    assert counter_qubits(L) == c


class TestCompress:
    def test_single(self, rng):
        G = random_contraction(rng, 2, 0.8)
        out = compress([dilate(G, 1.5, target=G)])
        assert out.alpha == 1.5
        assert verify(out, G) <= 1e-12

    def test_pair_alpha_and_ancillas(self, rng):
        G1, G2 = random_matrix(rng, 2), random_matrix(rng, 2)
        b1 = dilate(G1, 2 * spectral_norm(G1))
        b2 = dilate(G2, 3 * spectral_norm(G2))
        out = compress([b1, b2])
        assert out.alpha == pytest.approx(b1.alpha * b2.alpha)
        assert out.m == max(b1.m, b2.m) + math.ceil(math.log2(2)) + 1
        assert verify(out, G2 @ G1) <= 1e-12 * spectral_norm(G2 @ G1) + 1e-13

    def test_five_segments(self, rng):
        mats = [random_contraction(rng, 2, 0.9) for _ in range(5)]
        out = compress([dilate(M, 1.0, target=M) for M in mats])
        assert out.m == 1 + 4
        assert is_unitary(out.unitary, 1e-10)
        assert np.linalg.norm(out.encoded - chain(mats), 2) <= 1e-12

    def test_unitary_segments(self, rng):
        mats = [random_unitary(rng, 2) for _ in range(3)]
        out = compress([dilate(M, 1.0, target=M) for M in mats])
        assert np.linalg.norm(out.encoded - chain(mats), 2) <= 1e-12

    def test_needs_exact_inputs(self, rng):
        G = random_contraction(rng, 2, 0.5)
        be = dilate(G, 1.0)
        be.eps = 1e-3
        with pytest.raises(PreconditionError):
            compress([be])

    def test_counter_witness(self, rng):
        # a nonzero counter reading flags a branch where some segment failed
        mats = [random_contraction(rng, 2, 0.5) for _ in range(3)]
        circ = assemble([dilate(M, 1.0) for M in mats])
        inner = 1 << (circ.ancillas + circ.n)
        psi = np.zeros(circ.unitary.shape[0], dtype=complex)
        psi[0] = 1
        out = circ.unitary @ psi
        counter_zero = out[:inner].reshape(1 << circ.ancillas, -1)
        good = np.linalg.norm(counter_zero[0]) ** 2
        assert good == pytest.approx(np.linalg.norm(chain(mats)[:, 0]) ** 2)
        assert np.linalg.norm(out[inner:]) ** 2 == pytest.approx(1 - np.linalg.norm(out[:inner]) ** 2)


@settings(max_examples=15)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=2**31 - 1))
def test_compress_is_exact(L, seed):
    rng = np.random.default_rng(seed)
    mats = [random_contraction(rng, 2, rng.uniform(0.2, 1.0)) for _ in range(L)]
    alphas = rng.uniform(1.0, 2.0, size=L)
    out = compress([dilate(M, a) for M, a in zip(mats, alphas)])
    assert out.alpha == pytest.approx(float(np.prod(alphas)))
    assert np.linalg.norm(out.encoded - chain(mats), 2) <= 1e-11


class TestLongTimeCompose:
    def test_identity_chain(self):
        encs = [dilate(np.eye(2), 1.0, target=np.eye(2)) for _ in range(3)]
        comp = long_time_compose(encs)
        assert comp.P == pytest.approx(1.0)
        assert verify(comp.encoding, np.eye(2)) <= comp.encoding.eps

    def test_unitary_segments(self, rng):
        H = random_matrix(rng, 2)
        H = (H + H.conj().T) / 2
        U = matrix_exp(-0.3j * H)
        encs = [dilate(U, 1.0, target=U) for _ in range(4)]
        comp = long_time_compose(encs)
        assert comp.L == 4
        target = np.linalg.matrix_power(U, 4)
        assert verify(comp.encoding, target) <= comp.encoding.eps
        lo, hi = comp.alpha_band
        assert lo <= comp.encoding.alpha <= hi

    def test_decaying_segments(self):
        G = matrix_exp(-0.5 * np.diag([1.0, 2.0]))
        encs = [dilate(G, 1.0, target=G) for _ in range(5)]
        comp = long_time_compose(encs)
        target = np.linalg.matrix_power(G, 5)
        assert comp.P == pytest.approx(spectral_norm(target))
        lo, hi = comp.alpha_band
        assert lo <= comp.encoding.alpha <= hi
        assert verify(comp.encoding, target) <= comp.encoding.eps

    def test_eps_prime_limit(self):
        encs = [dilate(np.eye(2), 1.0) for _ in range(2)]
        with pytest.raises(PreconditionError):
            long_time_compose(encs, eps_prime=0.3)

    def test_large_segment_errors(self):
        be = dilate(0.5 * np.eye(2), 1.0, target=0.5 * np.eye(2))
        be.eps = 0.3
        with pytest.raises(PreconditionError):
            long_time_compose([be])
