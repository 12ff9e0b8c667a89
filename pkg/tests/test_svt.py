import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timemarch.block_encoding import dilate, product, verify
from timemarch.errors import CapViolationError, ConditioningError, InputError
from timemarch.linalg import is_unitary, spectral_norm, svd
from timemarch.minimax import ChebyshevPolynomial, amplification_target, solve_minimax
from timemarch.svt import (
    GAIN_GRID,
    apply_svt,
    invert,
    quantized_gain,
    rescale_argument,
    smallest_degree,
    uniform_amplify,
)

from conftest import random_contraction, random_unitary

IDENTITY = ChebyshevPolynomial([0.0, 1.0], "odd")


class TestApplySvt:
    def test_identity_polynomial(self, rng):
        A = random_contraction(rng, 2, 0.7)
        out, cost = apply_svt(dilate(A, 2.0), IDENTITY)
        assert out.alpha == 1.0 and out.m == 2
        assert np.linalg.norm(out.block - A / 2.0, 2) <= 1e-12
        assert cost.queries_to_input == 1

    def test_t3_rank_one(self):
        u = np.array([1, 1j]) / math.sqrt(2)
        v = np.array([1, -1]) / math.sqrt(2)
        B = 0.5 * np.outer(u, v.conj())
        t3 = ChebyshevPolynomial([0, 0, 0, 1.0], "odd")
        out, cost = apply_svt(dilate(B, 1.0), t3)
        # T_3(1/2) = -1: magnitude one, the sign sits in the left factor
        assert np.allclose(out.block, -np.outer(u, v.conj()), atol=1e-12)
        assert svd(out.block).s[0] == pytest.approx(1.0)
        assert cost.queries_to_input == 3

    def test_amplification_on_window(self):
        p = solve_minimax(amplification_target(5.0, 0.05), 21).poly
        out, _ = apply_svt(dilate(np.diag([0.1, 0.2]), 1.0), p)
        assert np.allclose(np.diag(out.block), [0.475, 0.95], rtol=0.01 / 0.475)

    def test_cap_violation(self):
        with pytest.raises(CapViolationError):
            apply_svt(dilate(np.eye(2) * 0.5, 1.0), ChebyshevPolynomial([0, 1.2], "odd"))

    def test_even_polynomial_rejected(self):
        with pytest.raises(InputError):
            apply_svt(dilate(np.eye(2) * 0.5, 1.0), ChebyshevPolynomial([0.5, 0, 0.5], "even"))


class TestUniformAmplify:
    def test_unitary(self, rng):
        U = random_unitary(rng, 2)
        res = uniform_amplify(dilate(U, 1.0, target=U), 0.1, 1e-3)
        assert res.encoding.alpha == pytest.approx(1 / 0.9)
        assert res.relative_error <= 1e-3
        assert verify(res.encoding, U) <= res.encoding.eps

    def test_half_norm(self, rng):
        X = 0.5 * random_unitary(rng, 2)
        res = uniform_amplify(dilate(X, 1.0, target=X), 0.1, 1e-3)
        assert res.encoding.alpha == pytest.approx(0.5 / 0.9)
        assert res.encoding.m == 2

    def test_random_four_by_four(self, rng):
        X = random_contraction(rng, 4, 0.3)
        res = uniform_amplify(dilate(X, 1.0, target=X), 0.05, 1e-3)
        assert verify(res.encoding, X) <= 1e-3 * spectral_norm(X)
        assert res.cost.queries_to_input == res.poly.degree
        assert np.max(svd(res.encoding.block).s) <= 1 + 1e-12

    def test_gain_quantization(self):
        for g in (1.0, 1.01, 3.7, 20.0):
            q = quantized_gain(g)
            assert g <= q < g * GAIN_GRID + 1e-12

    def test_rescale_argument(self):
        p = solve_minimax(amplification_target(4.0, 0.1), 11).poly
        r = rescale_argument(p, 0.8)
        xs = np.linspace(-1, 1, 41)
        assert np.allclose(r(xs), p(0.8 * xs), atol=1e-12)
        assert r.degree == p.degree


class TestInvert:
    def test_identity(self):
        out, _ = invert(dilate(np.eye(2), 1.0, target=np.eye(2)), 1e-3, 1.0)
        assert out.alpha == pytest.approx(4 / 3)
        assert verify(out, np.eye(2)) <= 1e-3

    def test_diagonal(self):
        A = np.diag([0.5, 1.0])
        out, _ = invert(dilate(A, 1.0, target=A), 1e-4, 2.0)
        assert out.alpha == pytest.approx(8 / 3)
        assert verify(out, np.diag([2.0, 1.0])) <= 1e-4
        assert np.allclose(out.block, np.diag([2.0, 1.0]) * 3 / 8, atol=1e-4 * 3 / 8)

    def test_conditioning(self):
        A = np.diag([0.1, 1.0])
        with pytest.raises(ConditioningError):
            invert(dilate(A, 1.0), 1e-3, 2.0)

    @pytest.mark.slow
    def test_degree_tracks_condition_number(self):
        eps = 1e-3
        ratios = []
        for kappa in (2, 4, 8, 16, 32):
            A = np.diag([1.0 / kappa, 1.0])
            _, cost = invert(dilate(A, 1.0), eps, kappa)
            ratios.append(cost.degree / (kappa * math.log(kappa / eps)))
        assert max(ratios) / min(ratios) <= 3

    def test_composes_to_identity(self, rng):
        A = random_contraction(rng, 2, 0.9)
        kappa = 1 / svd(A).s[-1]
        be = dilate(A, 1.0, target=A)
        inv, _ = invert(be, 1e-4, kappa)
        out = product(be, inv)
        assert verify(out, np.eye(2)) <= out.eps + 1e-12


def test_smallest_degree_finds_threshold():
    errs = {d: 2.0 ** (-d) for d in range(1, 400, 2)}
    assert smallest_degree(errs.__getitem__, 1e-30) == 101


@settings(max_examples=10)
@given(st.floats(min_value=0.05, max_value=0.9), st.floats(min_value=0.02, max_value=0.3),
       st.integers(min_value=0, max_value=2**31 - 1))
def test_amplified_singular_values_relative(norm, delta, seed):
    rng = np.random.default_rng(seed)
    X = random_contraction(rng, 2, norm)
    eps = 1e-3
    res = uniform_amplify(dilate(X, 1.0, target=X), delta, eps)
    assert is_unitary(res.encoding.unitary, 1e-9)
    s_in = svd(X).s
    s_out = svd(res.encoding.encoded).s
    assert np.all(np.abs(s_out / s_in - 1) <= eps * (1 + 1e-9))
    assert np.max(svd(res.encoding.block).s) <= 1 + 1e-12
