"""Long-time solvers, success-probability accounting and demonstration scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .block_encoding import BlockEncoding, build_mat_encoding, compact, prep_unitary
from .errors import InputError, PreconditionError
from .families import jordan, search
from .gadget import Composition, long_time_compose
from .integrators import (
    SQRT_E,
    ContourConfig,
    DysonConfig,
    MagnusConfig,
    _exp_tail,
    commutator_norm_sup,
    dyson_error_bound,
    dyson_short,
    magnus1_short,
    magnus_error_bound,
)
from .linalg import (
    TimeDependentMatrix,
    TimeGrid,
    norm_integral,
    spectral_norm,
    time_ordered_exp,
)

MAX_SMOOTH_SAMPLES = 1 << 22
MAX_QUADRATURE_QUBITS = 30


# -- meshes and the amplification ratio ---------------------------------------

def build_mesh(A: TimeDependentMatrix, T: float | None = None, policy: str = "uniform") -> TimeGrid:
    """Time mesh with every step satisfying ``step * ||A|| <= 1/2``.

    ``uniform`` uses ``ceil(2 alpha T)`` equal steps. ``l1`` uses as many
    steps as ``ceil(2 int ||A||)`` and places the knots so each step carries
    the same integral of ``||A||``; any step that still breaks the step-size
    condition for its local norm bound is split evenly.
    """
    T = A.T if T is None else float(T)
    if not T > 0:
        raise InputError("T must be positive")
    if policy == "uniform":
        L = max(1, math.ceil(2 * A.alpha * T - 1e-12))
        return TimeGrid(np.linspace(0.0, T, L + 1))
    if policy != "l1":
        raise InputError(f"unknown mesh policy {policy!r}")
    total = norm_integral(A, 0.0, T)
    L = max(1, math.ceil(2 * total - 1e-12))
    knots = [0.0]
    for l in range(1, L):
        goal = total * l / L
        lo = knots[-1]
        knots.append(brentq(lambda t: norm_integral(A, 0.0, t) - goal, lo, T, xtol=1e-12, rtol=1e-14))
    knots.append(T)
    refined = [0.0]
    for a, b in zip(knots[:-1], knots[1:]):
        pieces = max(1, math.ceil(2 * A.local_alpha(a, b) * (b - a) - 1e-12))
        refined.extend(np.linspace(a, b, pieces + 1)[1:].tolist())
    return TimeGrid(np.array(refined))


def segment_alpha(A: TimeDependentMatrix, a: float, b: float) -> float:
    """Subnormalization for sampling ``A`` on ``[a, b]``.

    Segments where ``A`` is (nearly) zero get ``1 / (4 (b - a))``; any
    positive value is valid there and this one keeps the contour radius
    away from zero.
    """
    alpha = A.local_alpha(a, b)
    return alpha if alpha * (b - a) >= 1e-3 else 0.25 / (b - a)


def segment_propagators(A: TimeDependentMatrix, mesh: TimeGrid, tol: float = 1e-12,
                        policy: str = "magnus4") -> list[np.ndarray]:
    return [time_ordered_exp(A, a, b, tol, policy) for a, b in mesh.segments]


def amplification_ratio(A: TimeDependentMatrix, mesh: TimeGrid, psi0,
                        propagators: Sequence[np.ndarray] | None = None) -> tuple[float, float]:
    """``(Q, P)`` with ``P`` the product of segment propagator norms and ``Q = P / ||psi(T)||``."""
    psi0 = _unit(psi0)
    props = segment_propagators(A, mesh) if propagators is None else propagators
    psi = psi0
    P = 1.0
    for U in props:
        psi = U @ psi
        P *= spectral_norm(U)
    norm = float(np.linalg.norm(psi))
    if norm == 0:
        raise PreconditionError("the solution vanishes at the final time")
    return P / norm, P


def _unit(psi0) -> np.ndarray:
    psi0 = np.asarray(psi0, dtype=complex).ravel()
    if abs(np.linalg.norm(psi0) - 1) > 1e-12:
        raise InputError("the initial state must have unit norm")
    return psi0


# -- success probability and amplitude amplification --------------------------

def success_probability(be: BlockEncoding, psi0) -> float:
    """Probability that all ancillas read zero after one run of the circuit."""
    out = be.apply(_unit(psi0))
    return float(np.vdot(out[: be.dim], out[: be.dim]).real)


@dataclass
class AmplifiedState:
    state: np.ndarray = field(repr=False)
    rounds: int
    success: float
    initial_success: float

    def system_state(self, dim: int) -> np.ndarray:
        """Normalized system state on the good branch."""
        good = self.state[:dim]
        return good / np.linalg.norm(good)


def amplification_rounds(p: float) -> tuple[int, float]:
    """Rounds of amplitude amplification and the damping factor on the good branch.

    With ``theta = asin(sqrt(p))`` the rounds are ``ceil(pi/(4 theta) - 1/2)``;
    damping the good amplitude to ``sin(pi / (2 (2r + 1)))`` makes ``r``
    rounds land exactly on success probability one.
    """
    if p <= 0:
        raise PreconditionError("success probability is zero; nothing to amplify")
    if p >= 2 / 3:
        return 0, 1.0
    theta = math.asin(math.sqrt(p))
    r = max(1, math.ceil(math.pi / (4 * theta) - 0.5 - 1e-12))
    target = math.pi / (2 * (2 * r + 1))
    return r, min(1.0, math.sin(target) / math.sin(theta))


def amplitude_amplify(be: BlockEncoding, psi0, eps: float | None = None,
                      sample: bool = False, rng: np.random.Generator | None = None) -> AmplifiedState:
    """Exact amplitude amplification of the all-zero-ancilla branch.

    A flag qubit (most significant) damps the good amplitude so that an
    integer number of rounds reaches certainty. Each round is the reflection
    about the good subspace followed by the reflection about the prepared
    state. With ``sample=True`` the reported success is a Bernoulli draw.
    """
    psi0 = _unit(psi0)
    p = success_probability(be, psi0)
    rounds, damp = amplification_rounds(p)
    D = be.unitary.shape[0]
    init = prep_unitary(psi0)
    c, s = damp, math.sqrt(max(0.0, 1 - damp * damp))
    R = np.array([[c, -s], [s, c]])

    def forward(v):
        v = v.reshape(2, D).copy()
        for f in range(2):
            sub = v[f].reshape(-1, be.dim)
            sub = sub @ init.T
            v[f] = be.unitary @ sub.reshape(D)
        return (R @ v).reshape(-1)

    def backward(v):
        v = (R.T @ v.reshape(2, D)).copy()
        for f in range(2):
            w = be.unitary.conj().T @ v[f]
            v[f] = (w.reshape(-1, be.dim) @ init.conj()).reshape(D)
        return v.reshape(-1)

    start = np.zeros(2 * D, dtype=complex)
    start[0] = 1.0
    state = forward(start)
    good = slice(0, be.dim)
    for _ in range(rounds):
        state[good] *= -1
        state = backward(state)
        state[0] *= -1
        state = -forward(state)
    success = float(np.vdot(state[good], state[good]).real)
    if sample:
        rng = rng or np.random.default_rng(0)
        success = float(rng.random() < success)
    return AmplifiedState(state, rounds, success, p)


# -- error measures -------------------------------------------------------------

@dataclass(frozen=True)
class NormalizedError:
    measured: float
    bound: float
    applicable: bool


def normalized_error(psi, phi) -> NormalizedError:
    """Distance between normalized states, with the bound ``4 ||psi - phi|| / ||psi||``.

    The bound applies when ``||psi - phi|| <= ||psi|| / 2``.
    """
    psi = np.asarray(psi, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    npsi, nphi = np.linalg.norm(psi), np.linalg.norm(phi)
    if npsi == 0 or nphi == 0:
        raise PreconditionError("cannot normalize a zero vector")
    measured = float(np.linalg.norm(psi / npsi - phi / nphi))
    diff = float(np.linalg.norm(psi - phi))
    applicable = diff <= npsi / 2
    bound = 4 * diff / npsi
    if applicable and measured > bound * (1 + 1e-12) + 1e-15:
        raise AssertionError("normalized error exceeds its bound")
    return NormalizedError(measured, bound, applicable)


# -- solver ---------------------------------------------------------------------

@dataclass
class SegmentRecord:
    a: float
    b: float
    norm: float
    error: float
    degree: int
    queries: int
    settings: dict


@dataclass
class SolveReport:
    integrator: str
    eps: float
    final_state: np.ndarray = field(repr=False)
    normalized_state: np.ndarray = field(repr=False)
    reference_state: np.ndarray = field(repr=False)
    Q: float
    P: float
    success_prob: float
    aa_rounds: int
    error: float
    error_bound: float
    eps_comp: float
    alpha_comp: float
    alpha_band: tuple[float, float]
    m_comp: int
    L: int
    mesh: TimeGrid = field(repr=False)
    queries: int
    segment_queries: int
    init_queries: int
    segments: list[SegmentRecord] = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    @property
    def success_times_q2(self) -> float:
        return self.success_prob * self.Q ** 2

    def summary(self) -> dict:
        return {
            "integrator": self.integrator, "eps": self.eps, "L": self.L,
            "Q": self.Q, "P": self.P, "success_prob": self.success_prob,
            "aa_rounds": self.aa_rounds, "error": self.error, "error_bound": self.error_bound,
            "eps_comp": self.eps_comp, "alpha_comp": self.alpha_comp,
            "alpha_band": list(self.alpha_band), "m_comp": self.m_comp,
            "queries": self.queries, "segment_queries": self.segment_queries,
            "init_queries": self.init_queries, "diagnostics": self.diagnostics,
        }


def _dyson_settings(A: TimeDependentMatrix, a: float, b: float, budget: float) -> DysonConfig:
    """Smallest truncation order and quadrature size meeting ``budget``."""
    h = b - a
    x = norm_integral(A, a, b)
    K = 1
    while _exp_tail(x, K) > budget / 2:
        K += 1
    V = A.variation(a, b)
    c = 2 * A.alpha * h
    weight = sum(c ** (k - 1) / math.factorial(k - 1) for k in range(1, K))
    n_q = 0
    if V > 0 and weight > 0:
        n_q = max(0, math.ceil(math.log2(h * V * weight / (budget / 2))))
    _check_quadrature(A, n_q)
    return DysonConfig(K, n_q)


def _check_quadrature(A: TimeDependentMatrix, n_q: int):
    if n_q > MAX_QUADRATURE_QUBITS:
        raise PreconditionError(f"quadrature needs {n_q} index qubits (cap {MAX_QUADRATURE_QUBITS})")
    if not A.piecewise_constant and (1 << n_q) > MAX_SMOOTH_SAMPLES:
        raise PreconditionError(
            f"quadrature needs 2^{n_q} samples of a smooth family (cap 2^22 at desk scale)")


def _pilot(A: TimeDependentMatrix, mesh: TimeGrid, psi0: np.ndarray, rel: float):
    """Cheap truncated-Dyson pass: estimates of ``||psi(T)||`` and ``P`` with error margins."""
    psi = psi0
    P, errs = 1.0, []
    for a, b in mesh.segments:
        x = norm_integral(A, a, b)
        budget = rel * math.exp(-x)
        cfg = _dyson_settings(A, a, b, budget)
        me = build_mat_encoding(A, a, b, cfg.n_q, segment_alpha(A, a, b))
        be, cost = dyson_short(me, cfg)
        D = be.encoded
        psi = D @ psi
        P *= spectral_norm(D)
        errs.append(be.eps * math.exp(x))
    drift = math.exp(sum(errs)) - 1
    psi_norm = float(np.linalg.norm(psi))
    return psi_norm, P, drift


def _plan_budget(A, mesh, psi0, eps):
    """``eps_comp`` and the per-segment relative budget from a pilot pass."""
    rel = 0.05
    for _ in range(6):
        psi_norm, P, drift = _pilot(A, mesh, psi0, rel)
        # the pilot's own error, relative to its product of norms
        slack = drift * P * math.exp(0.5)
        if psi_norm > 4 * slack:
            break
        rel /= 16
    psi_low = max(psi_norm - slack, psi_norm / 2)
    P_up = P * (1 + drift)
    eps_comp = eps * psi_low / 4
    L = len(mesh)
    per_segment = eps_comp / (2 * SQRT_E * P_up * L)
    return eps_comp, per_segment, {"psi_norm_estimate": psi_norm, "P_estimate": P,
                                   "pilot_drift": drift}


def _finish(integrator, A, mesh, psi0, eps, comp: Composition, records, props,
            eps_comp_target, extra) -> SolveReport:
    be = comp.encoding
    psi_out = be.encoded @ psi0
    psi_ref = psi0
    for U in props:
        psi_ref = U @ psi_ref
    Q, P = amplification_ratio(A, mesh, psi0, props)
    p = success_probability(be, psi0)
    aa = amplitude_amplify(be, psi0)
    err = normalized_error(psi_ref, psi_out)
    norm_ref = float(np.linalg.norm(psi_ref))
    diag = dict(extra)
    diag["q"] = _q_ratio(psi0, props, norm_ref)
    diag["kappa_V"] = _kappa_v(A)
    diag["eps_comp_target"] = eps_comp_target
    diag["amplified_success"] = aa.success
    segment_queries = int(sum(r.degree for r in records))
    queries = int(sum(r.degree * r.queries for r in records))
    init_queries = 2 * aa.rounds + 1
    return SolveReport(
        integrator=integrator, eps=eps, final_state=psi_out,
        normalized_state=psi_out / np.linalg.norm(psi_out), reference_state=psi_ref,
        Q=Q, P=P, success_prob=p, aa_rounds=aa.rounds, error=err.measured,
        error_bound=4 * comp.eps_comp / norm_ref, eps_comp=comp.eps_comp,
        alpha_comp=be.alpha, alpha_band=comp.alpha_band, m_comp=be.m, L=len(mesh), mesh=mesh,
        queries=queries, segment_queries=segment_queries, init_queries=init_queries,
        segments=records, diagnostics=diag)


def _q_ratio(psi0, props, norm_final) -> float:
    psi, best = psi0, 1.0
    for U in props:
        psi = U @ psi
        best = max(best, float(np.linalg.norm(psi)))
    return best / norm_final


def _kappa_v(A: TimeDependentMatrix):
    if not A.is_constant:
        return None
    M = A(0.0)
    _, V = np.linalg.eig(M)
    cond = float(np.linalg.cond(V))
    return cond if cond < 1e12 else "ill-conditioned"


def solve_dyson(A: TimeDependentMatrix, psi0, T: float | None = None, eps: float = 1e-3,
                policy: str = "uniform", oracle_tol: float | None = None) -> SolveReport:
    """Time-marching solve with truncated-Dyson segments.

    Budgets: ``eps_comp = eps ||psi(T)|| / 4`` (so the normalized error is at
    most ``eps``), and ``eps' = eps_l = eps_comp / (2 e^{1/2} P L)``, with
    ``||psi(T)||`` and ``P`` taken from a pilot pass.
    """
    psi0 = _unit(psi0)
    if not 0 < eps < 0.5:
        raise InputError("eps must lie in (0, 0.5)")
    mesh = build_mesh(A, T, policy)
    eps_comp, per_seg, extra = _plan_budget(A, mesh, psi0, eps)
    L = len(mesh)
    oracle_tol = oracle_tol or min(1e-11, eps * 1e-2 / L)
    encodings, records, props = [], [], []
    for a, b in mesh.segments:
        Xi = time_ordered_exp(A, a, b, oracle_tol, "magnus4")
        props.append(Xi)
        x = norm_integral(A, a, b)
        budget = per_seg * math.exp(-x)
        cfg = _dyson_settings(A, a, b, budget)
        me = build_mat_encoding(A, a, b, cfg.n_q, segment_alpha(A, a, b))
        be, cost = dyson_short(me, cfg)
        be.target = Xi
        encodings.append(be)
        records.append(SegmentRecord(a, b, spectral_norm(Xi), be.eps, 0, cost.queries_to_input,
                                     {"K": cfg.K, "n_q": cfg.n_q}))
    comp = long_time_compose(encodings, 1.0 / (2 * L), per_seg)
    for r, d in zip(records, comp.degrees):
        r.degree = d
    return _finish("dyson", A, mesh, psi0, eps, comp, records, props, eps_comp, extra)


def magnus_segment_count(alpha_comm: float, T: float, P: float, eps_comp: float,
                         L_min: int) -> int:
    """``max(alpha_comm T^2 P / eps_comp, L_min)`` rounded up."""
    return max(L_min, math.ceil(alpha_comm * T * T * P / eps_comp - 1e-12))


def solve_magnus(A: TimeDependentMatrix, psi0, T: float | None = None, eps: float = 1e-3,
                 oracle_tol: float | None = None, max_segments: int = 256) -> SolveReport:
    """Time-marching solve with first-order Magnus segments.

    The segment count starts at ``max(alpha_comm T^2 P / eps_comp, 2 alpha T)``
    and is doubled until every segment's certified error fits its budget.
    Each segment budget is split: half for the commutator term, a quarter
    for the quadrature term and a quarter for the contour exponential.
    """
    psi0 = _unit(psi0)
    if not 0 < eps < 0.5:
        raise InputError("eps must lie in (0, 0.5)")
    T = A.T if T is None else T
    base = build_mesh(A, T, "uniform")
    eps_comp, _, extra = _plan_budget(A, base, psi0, eps)
    alpha_comm = commutator_norm_sup(A, 65)
    P_est = extra["P_estimate"] * (1 + extra["pilot_drift"])
    L = magnus_segment_count(alpha_comm, T, P_est, eps_comp, len(base))
    L_formula = L
    while True:
        if L > max_segments:
            raise PreconditionError(f"Magnus needs more than {max_segments} segments")
        mesh = TimeGrid(np.linspace(0.0, T, L + 1))
        per_seg = eps_comp / (2 * SQRT_E * P_est * L)
        ok = True
        plans = []
        for a, b in mesh.segments:
            x = norm_integral(A, a, b)
            budget = per_seg * math.exp(-x)
            comm = magnus_error_bound(A, a, b, 1).commutator
            if comm > budget / 2:
                ok = False
                break
            h = b - a
            V = A.variation(a, b)
            n_q = 0
            if V > 0:
                n_q = max(0, math.ceil(math.log2(h * V * math.exp(x + 0.5) / (budget / 4))))
            _check_quadrature(A, n_q)
            plans.append((a, b, n_q, budget))
        if ok:
            break
        L *= 2
    oracle_tol = oracle_tol or min(1e-11, eps * 1e-2 / L)
    encodings, records, props = [], [], []
    for a, b, n_q, budget in plans:
        Xi = time_ordered_exp(A, a, b, oracle_tol, "magnus4")
        props.append(Xi)
        me = build_mat_encoding(A, a, b, n_q, segment_alpha(A, a, b))
        be, cost = magnus1_short(me, MagnusConfig(n_q), ContourConfig(budget / 4))
        be = compact(be)
        be.target = Xi
        encodings.append(be)
        records.append(SegmentRecord(a, b, spectral_norm(Xi), be.eps, 0, cost.queries_to_input,
                                     {"n_q": n_q, "K_C": cost.notes["K"]}))
    comp = long_time_compose(encodings, 1.0 / (2 * L), per_seg)
    for r, d in zip(records, comp.degrees):
        r.degree = d
    extra.update({"alpha_comm": alpha_comm, "L_formula": L_formula})
    return _finish("magnus1", A, mesh, psi0, eps, comp, records, props, eps_comp, extra)


def solve(A, psi0, T=None, eps=1e-3, integrator="dyson", policy="uniform") -> SolveReport:
    if integrator == "dyson":
        return solve_dyson(A, psi0, T, eps, policy)
    if integrator in ("magnus", "magnus1"):
        if policy != "uniform":
            raise InputError("the Magnus solver only supports the uniform mesh")
        return solve_magnus(A, psi0, T, eps)
    raise InputError(f"unknown integrator {integrator!r}")


# -- demonstrations -------------------------------------------------------------

@dataclass
class EulerDemo:
    norm_A: float
    T: float
    L: int
    naive_success: float
    naive_trials: float
    iterate_trials: float
    intrinsic_success: float
    reference_trials: float
    Q: float
    aa_rounds: int
    rows: list[tuple[int, float, float, float]]


def euler_decay_demo(A, T: float = 5.0, L: int = 50, solve_eps: float = 1e-3) -> EulerDemo:
    """Success probability of chaining ``L`` first-order steps with per-step post-selection.

    Step ``l`` encodes ``I + A h`` with subnormalization ``1 + ||A|| h``, so it
    succeeds with probability ``||psi_l||^2 / ((1 + ||A|| h)^2 ||psi_{l-1}||^2)``.
    ``psi_l`` is the exact solution at the knots; the variant that feeds
    the Euler iterates forward is reported as ``iterate_trials``.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    h = T / L
    norm_A = spectral_norm(A)
    gamma = 1 + norm_A * h
    psi0 = np.zeros(n, dtype=complex)
    psi0[0] = 1.0
    step = time_ordered_exp(_const(A, T), 0.0, h, 1e-13)
    psi, it = psi0, psi0
    naive, iterate, rows = 1.0, 1.0, []
    for l in range(1, L + 1):
        new = step @ psi
        naive *= (np.linalg.norm(new) ** 2 / np.linalg.norm(psi) ** 2) / gamma ** 2
        new_it = it + h * (A @ it)
        iterate *= (np.linalg.norm(new_it) ** 2 / np.linalg.norm(it) ** 2) / gamma ** 2
        psi, it = new, new_it
        rows.append((l, l * h, naive, float(np.linalg.norm(psi) ** 2)))
    intrinsic = float(np.linalg.norm(psi) ** 2)
    report = solve_dyson(_const(A, T), psi0, T, solve_eps)
    return EulerDemo(norm_A, T, L, naive, 1 / naive, 1 / iterate, intrinsic,
                     math.exp(2 * norm_A * T), report.Q, report.aa_rounds, rows)


def _const(M, T):
    from .families import constant

    return constant(M, T)


@dataclass
class SearchDemo:
    qubits: int
    N: int
    T: float
    probability: float
    probability_formula: float
    solver_probability: float
    Q: float
    report: SolveReport | None = field(repr=False, default=None)


def search_time(N: int) -> float:
    return 0.25 * math.log(3 * (N - 1))


def search_demo(qubits: int, T: float | None = None, eps: float = 1e-3, run_solver: bool = True) -> SearchDemo:
    """Evolve the uniform state under minus the marking oracle.

    At ``T = log(3 (N - 1)) / 4`` the marked state is observed with
    probability ``3/4``.
    """
    if not 1 <= qubits <= 4:
        raise InputError("search demo supports 1 to 4 qubits")
    N = 1 << qubits
    T = search_time(N) if T is None else T
    psi0 = np.full(N, 1 / math.sqrt(N), dtype=complex)
    formula = 1.0 / ((N - 1) * math.exp(-4 * T) + 1)
    if T == 0:
        return SearchDemo(qubits, N, 0.0, 1 / N, formula, 1 / N, 1.0)
    A = search(T, qubits)
    psi_T = np.exp(np.diag(A(0.0)).real * T) * psi0
    prob = float(abs(psi_T[-1]) ** 2 / np.vdot(psi_T, psi_T).real)
    mesh = build_mesh(A, T)
    Q, _ = amplification_ratio(A, mesh, psi0)
    report = solve_dyson(A, psi0, T, eps) if run_solver else None
    solver_prob = float(abs(report.normalized_state[-1]) ** 2) if report else prob
    return SearchDemo(qubits, N, T, prob, formula, solver_prob, Q, report)


@dataclass
class JordanDemo:
    times: list[float]
    propagator_norms: list[float]
    Q: list[float]
    norm_fit_r2: float
    logq_fit_r2: float
    logq_slope: float


def _r2(x, y) -> tuple[float, float]:
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss = float(np.sum((y - y.mean()) ** 2))
    return (1 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0), float(slope)


def jordan_demo(times: Sequence[float] = tuple(range(1, 9))) -> JordanDemo:
    """``||e^{AT}||`` and ``Q`` for the Jordan block over a range of horizons.

    The initial state is the eigenvector ``e_1``, so ``||psi(T)|| = 1`` while
    the product of segment norms keeps growing.
    """
    psi0 = np.array([1, 0], dtype=complex)
    norms, Qs = [], []
    for T in times:
        A = jordan(T)
        mesh = build_mesh(A, T)
        Q, _ = amplification_ratio(A, mesh, psi0)
        norms.append(spectral_norm(time_ordered_exp(A, 0.0, T, 1e-12)))
        Qs.append(Q)
    r2n, _ = _r2(times, norms)
    r2q, slope = _r2(times, np.log(Qs))
    return JordanDemo(list(map(float, times)), norms, Qs, r2n, r2q, slope)
