"""Acceptance suite: one test (and one PASS/FAIL line) per criterion."""

import math
import time

import numpy as np
import pytest
from scipy.linalg import expm

from timemarch import families
from timemarch.block_encoding import MatEncoding, dilate, verify
from timemarch.gadget import compress, long_time_compose
from timemarch.integrators import (
    ContourConfig,
    DysonConfig,
    MagnusConfig,
    contour_exp,
    dyson_short,
    magnus1_short,
    magnus_error_bound,
    trapezoid_bound,
    trapezoid_exp,
)
from timemarch.linalg import matrix_exp, spectral_norm, time_ordered_exp
from timemarch.minimax import amplification_target, erf_reference_poly, minimax_error, solve_minimax
from timemarch.solver import (
    amplification_ratio,
    build_mesh,
    euler_decay_demo,
    jordan_demo,
    search_demo,
    solve_dyson,
)

from conftest import random_contraction, random_matrix, record_verdict

PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)


def unit(n, k=0):
    v = np.zeros(n, dtype=complex)
    v[k] = 1
    return v


def uniform(n):
    return np.full(n, 1 / math.sqrt(n), dtype=complex)


def dual_oracle(A, a, b):
    """Propagator from two independent stepping rules, which must agree."""
    U1 = time_ordered_exp(A, a, b, 1e-12, "magnus4")
    U2 = time_ordered_exp(A, a, b, 1e-10, "midpoint")
    assert np.linalg.norm(U1 - U2, 2) <= 1e-8 * max(1.0, spectral_norm(U1))
    return U1


def exact_final_state(A, T, psi0):
    """Piecewise-constant families through scipy's expm, smooth ones through the dual oracle."""
    if A.is_constant:
        return expm(A(0.0) * T) @ psi0
    if A.name == "jump":
        edges = [0.0] + list(A.breakpoints) + [T]
        psi = psi0
        for lo, hi in zip(edges[:-1], edges[1:]):
            psi = expm(A((lo + hi) / 2) * (hi - lo)) @ psi
        return psi
    return dual_oracle(A, 0.0, T) @ psi0


# ---------------------------------------------------------------------------

def test_criterion_01_polynomial_reproduction():
    start = time.time()
    problem = amplification_target(5.0, 0.05)
    degree = next(d for d in range(1, 26, 2) if solve_minimax(problem, d).fine_error <= 0.01)
    poly = solve_minimax(problem, degree).poly
    window_err = minimax_error(poly, problem)
    xs = np.linspace(-1, 1, 200_001)
    sup = float(np.max(np.abs(poly(xs))))
    erf = erf_reference_poly(5.0, 0.05, 0.01)
    ratio = erf.degree / degree
    elapsed = time.time() - start
    ok = degree <= 25 and window_err <= 0.01 and sup <= 1 and ratio >= 20 and elapsed < 60
    assert record_verdict(1, ok, f"LP degree {degree} (err {window_err:.3g}, sup {sup:.6f}); "
                                 f"erf degree {erf.degree} = {ratio:.0f}x; {elapsed:.1f}s")


def test_criterion_02_compression_exact():
    rng = np.random.default_rng(2)
    worst, formulas = 0.0, True
    for _ in range(50):
        L = int(rng.integers(1, 9))
        n = int(rng.integers(1, 3))
        mats = [random_contraction(rng, 1 << n, rng.uniform(0.1, 1.0)) for _ in range(L)]
        alphas = rng.uniform(1.0, 3.0, size=L)
        encs = [dilate(M, a) for M, a in zip(mats, alphas)]
        out = compress(encs)
        prod = np.eye(1 << n, dtype=complex)
        for M in mats:
            prod = M @ prod
        worst = max(worst, float(np.max(np.abs(out.block - prod / np.prod(alphas)))))
        formulas &= out.alpha == float(np.prod(alphas))
        formulas &= out.m == max(e.m for e in encs) + math.ceil(math.log2(L)) + 1
    ok = worst <= 1e-9 and formulas
    assert record_verdict(2, ok, f"50 suites, max block deviation {worst:.2e}, alpha/m formulas {formulas}")


def test_criterion_03_composition_band():
    rng = np.random.default_rng(3)
    in_band, verified, worst_margin = 0, 0, 0.0
    for _ in range(20):
        L = int(rng.integers(1, 6))
        encs = []
        for _ in range(L):
            G = matrix_exp(0.4 * random_matrix(rng, 2) / 2.5)
            E = random_matrix(rng, 2)
            E *= 1e-4 * spectral_norm(G) / spectral_norm(E)
            be = dilate(G + E, 1.2 * spectral_norm(G + E), target=G)
            be.eps = spectral_norm(E)
            encs.append(be)
        comp = long_time_compose(encs)
        lo, hi = comp.alpha_band
        in_band += lo <= comp.encoding.alpha <= hi
        target = encs[0].target
        for be in encs[1:]:
            target = be.target @ target
        resid = verify(comp.encoding, target)
        verified += resid <= comp.eps_comp
        worst_margin = max(worst_margin, resid / comp.eps_comp)
    ok = in_band == 20 and verified == 20
    assert record_verdict(3, ok, f"alpha in band {in_band}/20, residual <= eps_comp {verified}/20 "
                                 f"(worst ratio {worst_margin:.2g})")


def _dyson_suite():
    rng = np.random.default_rng(4)
    M = random_matrix(rng, 2)
    M /= spectral_norm(M)
    cases = [(families.constant(M, 1.0), 0.0, 0.5, 4, 0), (families.decay(1.0), 0.0, 0.5, 4, 0)]
    fams = [families.jump(3.0), families.jump(3.0, qubits=2), families.rotating(2.0),
            families.linear(1.0), families.commuting(2.0), families.ramp(2.0)]
    for A in fams:
        # jump windows straddle the first jump, the second jump, and neither
        windows = [(0.8, 1.2), (1.9, 2.2), (0.0, 0.5)] if A.name == "jump" else [(0.0, 0.4), (0.3, 0.6)]
        for a, b in windows:
            for K, n_q in ((3, 4), (5, 8)):
                cases.append((A, a, b, K, n_q))
    return cases


def test_criterion_04_dyson_bound():
    cases = _dyson_suite()
    assert len(cases) == 30
    held, worst = 0, 0.0
    for A, a, b, K, n_q in cases:
        alpha = A.local_alpha(a, b)
        be, _ = dyson_short(MatEncoding(A, a, b, n_q, alpha), DysonConfig(K, n_q))
        resid = float(np.linalg.norm(be.encoded - dual_oracle(A, a, b), 2))
        held += resid <= be.eps
        worst = max(worst, resid / be.eps)
    A0, a0, b0, K0, q0 = cases[0]
    _, cost = dyson_short(MatEncoding(A0, a0, b0, q0, 1.0), DysonConfig(K0, q0))
    trunc = cost.notes["bound"].truncation
    exact = 0.5 ** 4 / 24
    ok = held == 30 and abs(trunc - exact) <= 1e-15
    assert record_verdict(4, ok, f"residual <= bound in {held}/30 (worst ratio {worst:.2g}); "
                                 f"constant-A truncation {trunc:.6e} vs {exact:.6e}")


def test_criterion_05_magnus_commutator():
    contour = ContourConfig(1e-7)
    commuting_ok = True
    for A, (a, b) in ((families.commuting(2.0), (0.0, 0.5)), (families.commuting(2.0), (1.0, 1.4)),
                      (families.decay(1.0), (0.0, 0.5))):
        alpha = A.local_alpha(a, b)
        out, cost = magnus1_short(MatEncoding(A, a, b, 5, alpha), MagnusConfig(5), contour)
        bound = cost.notes["magnus_bound"]
        resid = float(np.linalg.norm(out.encoded - dual_oracle(A, a, b), 2))
        commuting_ok &= bound.commutator <= 1e-12
        commuting_ok &= resid <= bound.variation + cost.notes["contour_eps"]
    general_ok = True
    for A, (a, b) in ((families.rotating(1.0, scale=0.5), (0.0, 0.5)), (families.linear(1.0), (0.0, 0.4)),
                      (families.jump(3.0), (0.8, 1.2))):
        alpha = A.local_alpha(a, b)
        out, _ = magnus1_short(MatEncoding(A, a, b, 5, alpha), MagnusConfig(5), contour)
        general_ok &= float(np.linalg.norm(out.encoded - dual_oracle(A, a, b), 2)) <= out.eps
    ratios = []
    for A in (families.rotating(2.0), families.linear(2.0)):
        for h in (0.4, 0.2, 0.1):
            full = magnus_error_bound(A, 0.0, h, 1).commutator
            half = magnus_error_bound(A, 0.0, h / 2, 1).commutator
            ratios.append(full / half)
            alpha = A.local_alpha(0.0, h)
            ratios.append((h * alpha) ** 2 / (h / 2 * alpha) ** 2)
    ok = commuting_ok and general_ok and min(ratios) >= 3.5
    assert record_verdict(5, ok, f"commuting within TV+contour {commuting_ok}; full bound holds {general_ok}; "
                                 f"min halving ratio {min(ratios):.2f}")


def test_criterion_06_contour():
    rng = np.random.default_rng(6)
    tail_ratios, under_bound = [], True
    for alpha in (0.5, 1.0):
        H = random_matrix(rng, 3)
        H = (H - H.conj().T) / 2
        for A in (alpha * np.diag([1.0, -0.5]), alpha * H / spectral_norm(H)):
            errs = []
            for K in range(4, 48):
                e = float(np.linalg.norm(trapezoid_exp(A, K, 2 * alpha) - expm(A), 2))
                under_bound &= e <= trapezoid_bound(alpha, 2 * alpha, 4 * alpha, K, math.exp(4 * alpha))
                errs.append(e)
            tail = [x for x in errs if x > 1e-12][-8:]
            tail_ratios += [x / y for x, y in zip(tail, tail[1:])]
    geometric = all(1.5 <= r <= 3 for r in tail_ratios)
    resid_ok, k_ok = True, True
    for alpha in (0.25, 0.5, 1.0):
        A = alpha * np.diag([1.0, -0.3])
        for eps in (1e-3, 1e-5):
            out, cost = contour_exp(dilate(A, alpha), ContourConfig(eps))
            resid_ok &= verify(out, expm(A)) <= eps
            k_ok &= cost.notes["K"] <= math.ceil((4 * alpha + math.log(16 / (3 * eps))) / math.log(2)) + 1
    ok = geometric and under_bound and resid_ok and k_ok
    assert record_verdict(6, ok, f"tail ratios in [{min(tail_ratios):.2f}, {max(tail_ratios):.2f}], "
                                 f"under bound {under_bound}; residual <= eps {resid_ok}; K = O(alpha + log 1/eps) {k_ok}")


SUITE = [
    ("zero", lambda: families.zero(2.0), PLUS),
    ("decay", lambda: families.decay(2.0), PLUS),
    ("hamiltonian", lambda: families.hamiltonian(2.0), PLUS),
    ("hamiltonian-2q", lambda: families.hamiltonian(4.0, qubits=2), uniform(4)),
    ("jump", lambda: families.jump(3.0), PLUS),
    ("kappa_v", lambda: families.kappa_v(1.0, 1e-3), PLUS),
    ("search", lambda: families.search(math.log(9) / 4), uniform(4)),
    ("jordan", lambda: families.jordan(2.0), PLUS),
    ("linear", lambda: families.linear(0.5), PLUS),
]


@pytest.fixture(scope="module")
def suite_runs():
    runs = {}
    for name, make, psi0 in SUITE:
        A = make()
        exact = exact_final_state(A, A.T, psi0)
        for eps in (1e-3, 1e-5):
            runs[name, eps] = (solve_dyson(A, psi0, A.T, eps), exact)
    return runs


def test_criterion_07_success_and_q(suite_runs):
    products = {name: rep.success_times_q2 for (name, eps), (rep, _) in suite_runs.items() if eps == 1e-3}
    band = all(1 / 8 <= p <= 8 for p in products.values())
    unitary_q = []
    for A in (families.hamiltonian(2.0), families.hamiltonian(4.0, qubits=2), families.rotating(3.0)):
        psi0 = uniform(A.dim)
        Q, _ = amplification_ratio(A, build_mesh(A, A.T), psi0)
        unitary_q.append(Q)
    anti_ok = all(abs(q - 1) <= 1e-9 for q in unitary_q)
    demo = search_demo(2, run_solver=False)
    prob_ok = abs(demo.probability - 0.75) <= 1e-9
    q_expected = math.sqrt(16 / 3)
    q_ok = abs(demo.Q - q_expected) <= 1e-9
    ok = band and anti_ok and prob_ok and q_ok
    detail = (f"p*Q^2 in [{min(products.values()):.3f}, {max(products.values()):.3f}]; "
              f"anti-Hermitian Q-1 max {max(abs(q - 1) for q in unitary_q):.1e}; "
              f"search Pr {demo.probability:.12f}; search Q {demo.Q:.10f} vs sqrt(16/3) = {q_expected:.10f}")
    assert record_verdict(7, ok, detail)


def _aic(x, y):
    coef = np.polyfit(x, y, 1)
    rss = float(np.sum((y - np.polyval(coef, x)) ** 2))
    return len(x) * math.log(rss / len(x)) + 4


def test_criterion_08_end_to_end(suite_runs):
    start = time.time()
    failures = []
    for (name, eps), (rep, exact) in suite_runs.items():
        err = float(np.linalg.norm(rep.normalized_state - exact / np.linalg.norm(exact)))
        if not err <= eps:
            failures.append(f"{name}@{eps:g}: {err:.2e}")
    A = families.jump(3.0)
    epss = np.array([1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    queries = np.array([solve_dyson(A, PLUS, 3.0, e).queries for e in epss], dtype=float)
    logq = np.log(queries)
    aic_poly = _aic(np.log(np.log(1 / epss)), logq)
    aic_power = _aic(np.log(1 / epss), logq)
    elapsed = time.time() - start
    ok = not failures and aic_poly < aic_power
    detail = (f"{len(suite_runs) - len(failures)}/{len(suite_runs)} runs within eps"
              + (f" (failed: {', '.join(failures)})" if failures else "")
              + f"; AIC polylog {aic_poly:.1f} vs power {aic_power:.1f}; sweep {elapsed:.0f}s")
    assert record_verdict(8, ok, detail)


def test_criterion_09_euler_collapse():
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    d = euler_decay_demo(-1j * X, T=5.0, L=50)
    ratio = d.naive_trials / math.exp(10)
    ok = 0.5 <= ratio <= 2 and abs(d.Q - 1) <= 1e-9 and d.aa_rounds <= 1
    assert record_verdict(9, ok, f"naive trials {d.naive_trials:.0f} = {ratio:.2f} e^10; "
                                 f"Q {d.Q:.12f}; aa_rounds {d.aa_rounds}")


def test_criterion_10_jordan_blowup():
    d = jordan_demo(range(1, 9))
    ok = d.norm_fit_r2 >= 0.99 and d.logq_fit_r2 >= 0.99 and d.logq_slope > 0
    assert record_verdict(10, ok, f"norm fit R^2 {d.norm_fit_r2:.5f}; log Q fit R^2 {d.logq_fit_r2:.8f}, "
                                  f"slope {d.logq_slope:.3f}")
