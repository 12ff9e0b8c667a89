import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import chebyshev as cheb

from timemarch.errors import DomainError, InputError
from timemarch.minimax import (
    ChebyshevPolynomial,
    MinimaxProblem,
    amplification_target,
    degree_sweep,
    erf_reference_poly,
    eval_poly,
    inverse_target,
    minimax_error,
    solve_minimax,
)
from timemarch.svt import smallest_degree


def t_k(k):
    c = np.zeros(k + 1)
    c[k] = 1.0
    return ChebyshevPolynomial(c, "odd" if k % 2 else "even")


class TestEval:
    def test_t1(self):
        assert eval_poly(t_k(1), 0.3) == pytest.approx(0.3)

    def test_t3_endpoint(self):
        assert eval_poly(t_k(3), 1.0) == pytest.approx(1.0)

    def test_t3_half(self):
        # T_3(x) = 4x^3 - 3x
        assert eval_poly(t_k(3), 0.5) == pytest.approx(-1.0)

    def test_against_trigonometric_form(self, rng):
        c = rng.normal(size=12)
        p = ChebyshevPolynomial(c)
        xs = np.linspace(-1, 1, 101)
        naive = sum(ck * np.cos(k * np.arccos(xs)) for k, ck in enumerate(c))
        assert np.max(np.abs(p(xs) - naive)) <= 1e-12

    def test_domain(self):
        with pytest.raises(DomainError):
            eval_poly(t_k(1), 1.5)

    def test_parity_enforced(self):
        with pytest.raises(InputError):
            ChebyshevPolynomial([1.0, 1.0], "odd")

    def test_text_round_trip(self, rng):
        c = np.zeros(8)
        c[1::2] = rng.normal(size=4)
        p = ChebyshevPolynomial(c, "odd", 0.9999)
        q = ChebyshevPolynomial.from_text(p.to_text())
        assert q.parity == "odd" and q.cap == 0.9999
        assert np.array_equal(q.coefficients, p.coefficients[: p.degree + 1])
        assert p.to_text().splitlines()[0] == f"odd {p.degree} 0.9999"


class TestTargets:
    def test_unit_gain(self):
        prob = amplification_target(1.0, 0.1)
        assert prob.intervals == ((-1.0, 1.0),)
        assert prob.target(np.array([0.5]))[0] == pytest.approx(0.45)

    def test_gain_five(self):
        prob = amplification_target(5.0, 0.05)
        assert prob.intervals == ((-0.2, 0.2),)
        assert prob.target(np.array([1.0]))[0] == pytest.approx(4.75)
        assert prob.cap == 0.9999

    def test_cap_rule(self):
        # max(0.9999, 1 - 0.1 delta) never drops below 0.9999
        assert amplification_target(2.0, 0.5).cap == 0.9999

    def test_inverse_values(self):
        prob = inverse_target(0.2)
        assert prob.target(np.array([0.2]))[0] == pytest.approx(0.75)
        assert prob.target(np.array([1.0]))[0] == pytest.approx(0.15)
        assert prob.cap == 1.0


class TestSolveMinimax:
    def test_identity_up_to_node_margin(self):
        # the node cap is shrunk by cos(pi d / (2 (M - 1))) so the bound holds between nodes
        prob = MinimaxProblem(lambda x: x, ((-1.0, 1.0),), "odd", 1.0)
        res = solve_minimax(prob, 1, grid=2000)
        margin = 1 - math.cos(math.pi / (2 * 1999))
        assert res.poly.coefficients[1] == pytest.approx(1.0 - margin, abs=1e-9)
        assert res.fine_error <= margin + 1e-9

    def test_gain_five_degree_21(self):
        res = solve_minimax(amplification_target(5.0, 0.05), 21)
        assert res.fine_error <= 0.01
        assert res.poly.sup_norm(1_000_001) <= 0.9999 + 1e-6

    def test_objective_and_fine_grid_agree(self):
        res = solve_minimax(amplification_target(5.0, 0.05), 17)
        assert res.fine_error <= 1.1 * res.objective
        assert res.fine_error >= res.objective - 1e-8

    def test_errors_nonincreasing(self):
        prob = amplification_target(5.0, 0.05)
        errs = [solve_minimax(prob, d).fine_error for d in range(5, 42, 4)]
        assert all(b <= a * (1 + 1e-6) + 1e-12 for a, b in zip(errs, errs[1:]))

    def test_parity_mismatch(self):
        with pytest.raises(InputError):
            solve_minimax(amplification_target(5.0, 0.05), 20)

    def test_odd_symmetry(self):
        p = solve_minimax(amplification_target(3.0, 0.1), 15).poly
        xs = np.linspace(0, 1, 51)
        assert np.array_equal(p(-xs), -p(xs))

    def test_inverse_degree_scales_inversely_with_threshold(self):
        degrees = []
        for delta in (0.5, 0.25, 0.125):
            prob = inverse_target(delta)
            degrees.append(smallest_degree(lambda d: solve_minimax(prob, d).fine_error, 1e-3))
        ratios = [b / a for a, b in zip(degrees, degrees[1:])]
        assert all(1.6 <= r <= 2.5 for r in ratios)


class TestErfReference:
    def test_order_of_two_thousand(self):
        ref = erf_reference_poly(5.0, 0.05, 0.01)
        assert ref.error <= 0.01
        assert 500 <= ref.degree <= 8000
        assert ref.poly.sup_norm() <= 1.0 + 1e-6

    @pytest.mark.slow
    def test_narrow_margin_order_ten_thousand(self):
        ref = erf_reference_poly(5.0, 0.01, 0.01)
        assert 2500 <= ref.degree <= 40000

    def test_lp_needs_far_lower_degree(self):
        prob = amplification_target(5.0, 0.05)
        lp = smallest_degree(lambda d: solve_minimax(prob, d).fine_error, 0.01)
        assert erf_reference_poly(5.0, 0.05, 0.01).degree >= 20 * lp


class TestSweep:
    def test_monotone_and_lp_faster(self):
        rows = degree_sweep(5.0, 0.05, [5, 11, 21, 41, 81, 161])
        lp = [r.lp_error for r in rows]
        erf = [r.erf_error for r in rows]
        assert all(b <= a * (1 + 1e-6) for a, b in zip(lp, lp[1:]))
        assert all(b <= a * (1 + 1e-6) for a, b in zip(erf, erf[1:]))
        assert all(r.lp_error < r.erf_error for r in rows)

    def test_deterministic(self):
        a = degree_sweep(5.0, 0.05, [9, 13])
        b = degree_sweep(5.0, 0.05, [9, 13])
        assert a == b


@given(st.floats(min_value=1.0, max_value=8.0), st.floats(min_value=0.02, max_value=0.5),
       st.sampled_from([3, 7, 11, 15]))
def test_amplification_cap_holds(gamma, delta, degree):
    prob = amplification_target(gamma, delta)
    res = solve_minimax(prob, degree)
    assert res.poly.sup_norm() <= prob.cap + 1e-6
    assert minimax_error(res.poly, prob, 20001) <= res.fine_error * 1.01 + 1e-9
