"""Bounded Chebyshev polynomial approximation.

Two constructions of odd polynomials that are linear on a window around the
origin and bounded by one on ``[-1, 1]``:

* a linear program over Chebyshev coefficients (minimax error on a node
  grid, with the magnitude cap enforced on every node), and
* a closed-form reference built from the Chebyshev series of a smoothed
  rectangle made of two error functions.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft
from numpy.polynomial import chebyshev as cheb
from scipy.optimize import linprog
from scipy.special import erf

from .errors import DomainError, InfeasibleError, InputError

_PARITIES = ("odd", "even", "none")


@dataclass(frozen=True)
class ChebyshevPolynomial:
    """Polynomial ``sum_k c_k T_k(x)`` with a declared parity and magnitude cap."""

    coefficients: np.ndarray = field(repr=False)
    parity: str = "none"
    cap: float = 1.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        if c.ndim != 1 or len(c) == 0:
            raise InputError("coefficients must be a non-empty 1-D array")
        if not np.all(np.isfinite(c)):
            raise InputError("coefficients must be finite")
        if self.parity not in _PARITIES:
            raise InputError(f"parity must be one of {_PARITIES}")
        if self.parity == "odd" and np.any(c[0::2] != 0):
            raise InputError("odd polynomial has non-zero even coefficients")
        if self.parity == "even" and np.any(c[1::2] != 0):
            raise InputError("even polynomial has non-zero odd coefficients")
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coefficients)
        return int(nz[-1]) if len(nz) else 0

    def __call__(self, x):
        return eval_poly(self, x)

    def sup_norm(self, points: int = 200_001) -> float:
        xs = np.cos(np.linspace(0.0, np.pi, points))
        return float(np.max(np.abs(cheb.chebval(xs, self.coefficients))))

    def to_text(self) -> str:
        lines = [f"{self.parity} {self.degree} {self.cap!r}"]
        lines += [repr(float(v)) for v in self.coefficients[: self.degree + 1]]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ChebyshevPolynomial":
        rows = [r for r in text.strip().splitlines() if r.strip()]
        if not rows:
            raise InputError("empty polynomial text")
        head = rows[0].split()
        if len(head) != 3:
            raise InputError("header must read 'parity degree cap'")
        parity, degree, cap = head[0], int(head[1]), float(head[2])
        coeffs = np.array([float(r) for r in rows[1:]])
        if len(coeffs) != degree + 1:
            raise InputError(f"expected {degree + 1} coefficients, found {len(coeffs)}")
        return cls(coeffs, parity, cap)


def eval_poly(poly: ChebyshevPolynomial, x):
    """Evaluate by Clenshaw recurrence; points must lie in [-1, 1]."""
    xs = np.asarray(x, dtype=float)
    if np.any(np.abs(xs) > 1 + 1e-12) or not np.all(np.isfinite(xs)):
        raise DomainError("Chebyshev evaluation outside [-1, 1]")
    return cheb.chebval(xs, poly.coefficients)


@dataclass(frozen=True)
class MinimaxProblem:
    """Approximate ``target`` on ``intervals`` subject to ``|p| <= cap`` on [-1, 1].

    ``weight`` turns the objective into a weighted error ``|p - f| / w``;
    ``key`` is a hashable description used to cache solutions.
    ``origin_slope`` adds the limit ``x -> 0`` of a relative error for odd
    targets, ``|p'(0) - s| <= t s``, which no finite grid captures.
    """

    target: Callable[[np.ndarray], np.ndarray]
    intervals: tuple[tuple[float, float], ...]
    parity: str
    cap: float
    weight: Callable[[np.ndarray], np.ndarray] | None = None
    key: tuple | None = None
    origin_slope: float | None = None

    def approximation_mask(self, x: np.ndarray) -> np.ndarray:
        mask = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            mask |= (x >= lo) & (x <= hi)
        return mask

    def weighted_error(self, x: np.ndarray, values: np.ndarray) -> np.ndarray:
        f = self.target(x)
        err = np.abs(values - f)
        if self.weight is not None:
            w = self.weight(x)
            err = np.divide(err, w, out=np.zeros_like(err), where=w > 0)
        return err


def amplification_cap(delta: float) -> float:
    return max(0.9999, 1.0 - 0.1 * delta)


def amplification_target(gamma: float, delta: float, relative: bool = False) -> MinimaxProblem:
    """Odd target ``(1 - delta) * gamma * x`` on ``|x| <= 1/gamma``.

    With ``relative`` the error is measured relative to the target value,
    which is what singular-value amplification needs.
    """
    if not gamma >= 1:
        raise InputError(f"gain must be >= 1, got {gamma}")
    if not 0 < delta < 1:
        raise InputError(f"margin must lie in (0, 1), got {delta}")
    slope = (1 - delta) * gamma
    edge = 1.0 / gamma
    weight = (lambda x: slope * np.abs(x)) if relative else None
    return MinimaxProblem(
        target=lambda x: slope * x,
        intervals=((-edge, edge),),
        parity="odd",
        cap=amplification_cap(delta),
        weight=weight,
        key=("amplify", float(gamma), float(delta), bool(relative)),
        origin_slope=slope if relative else None,
    )


def inverse_target(delta: float) -> MinimaxProblem:
    """Odd target ``3 delta / (4 x)`` on ``delta <= |x| <= 1``."""
    if not 0 < delta <= 1:
        raise InputError(f"threshold must lie in (0, 1], got {delta}")
    scale = 0.75 * delta
    return MinimaxProblem(
        target=lambda x: scale / x,
        intervals=((-1.0, -delta), (delta, 1.0)),
        parity="odd",
        cap=1.0,
        key=("inverse", float(delta)),
    )


@dataclass(frozen=True)
class MinimaxResult:
    poly: ChebyshevPolynomial
    objective: float
    fine_error: float
    grid_size: int
    refinements: int


def chebyshev_nodes(count: int) -> np.ndarray:
    """``count`` Chebyshev extreme points on [-1, 1], ascending."""
    if count < 2:
        return np.array([-1.0, 1.0])
    return -np.cos(np.pi * np.arange(count) / (count - 1))


def _basis(x: np.ndarray, ks: np.ndarray) -> np.ndarray:
    return np.cos(np.outer(np.arccos(np.clip(x, -1.0, 1.0)), ks))


def _half_grid(problem: MinimaxProblem, count: int, parity: str) -> np.ndarray:
    x = chebyshev_nodes(count)
    ends = [e for iv in problem.intervals for e in iv]
    x = np.concatenate([x, ends])
    if parity in ("odd", "even"):
        x = np.abs(x)
        if parity == "odd":
            x = x[x > 0]
    return np.unique(x)


def _local_maxima(v: np.ndarray) -> np.ndarray:
    left = np.concatenate([[-np.inf], v[:-1]])
    right = np.concatenate([v[1:], [-np.inf]])
    return np.flatnonzero((v >= left) & (v >= right))


_CACHE: "OrderedDict[tuple, MinimaxResult]" = OrderedDict()
_CACHE_SIZE = 512


def solve_minimax(problem: MinimaxProblem, degree: int, grid: int | None = None,
                  max_refinements: int = 6) -> MinimaxResult:
    """Best capped approximation of the given degree, by linear programming.

    The LP minimises ``t`` subject to ``|p(x_j) - f(x_j)| <= t w(x_j)`` on the
    grid nodes inside the target intervals and a magnitude bound on every
    node. Nodes are Chebyshev points (``max(2000, 20 * degree)`` by default)
    plus the interval endpoints.

    A polynomial of degree ``d`` bounded by one on ``M`` Chebyshev extreme
    points is bounded by ``1 / cos(pi d / (2 (M - 1)))`` on the whole interval
    (Ehlich and Zeller), so the node bound is ``cap`` times that cosine and
    the cap then holds everywhere. When the error between nodes exceeds the
    LP objective by more than 8 %, the offending local maxima of a ten times
    finer grid are added and the LP is solved again.
    """
    degree = int(degree)
    if degree < 0:
        raise InputError("degree must be non-negative")
    parity = problem.parity
    if parity == "odd" and degree % 2 == 0:
        raise InputError("odd problems need an odd degree")
    if parity == "even" and degree % 2 == 1:
        raise InputError("even problems need an even degree")
    count = grid or max(2000, 20 * degree)
    cache_key = None
    if problem.key is not None:
        cache_key = (problem.key, degree, count)
        if cache_key in _CACHE:
            _CACHE.move_to_end(cache_key)
            return _CACHE[cache_key]

    if parity == "odd":
        ks = np.arange(1, degree + 1, 2)
    elif parity == "even":
        ks = np.arange(0, degree + 1, 2)
    else:
        ks = np.arange(degree + 1)

    x = _half_grid(problem, count, parity)
    fine = _half_grid(problem, 10 * count, parity)
    node_cap = problem.cap * math.cos(math.pi * degree / (2 * (count - 1)))
    fine_in = problem.approximation_mask(fine)
    fine_basis = None

    active = x
    coeffs = None
    t = None
    rounds = 0
    while True:
        coeffs, t = _solve_lp(problem, active, ks, node_cap)
        if fine_basis is None:
            fine_basis = _basis(fine[fine_in], ks)
        err = problem.weighted_error(fine[fine_in], fine_basis @ coeffs)
        if rounds >= max_refinements:
            break
        bad = _local_maxima(err)
        new = np.setdiff1d(fine[fine_in][bad[err[bad] > 1.08 * t + _NOISE_FLOOR]], active)
        if len(new) == 0:
            break
        active = np.union1d(active, new)
        rounds += 1

    full = np.zeros(degree + 1)
    full[ks] = coeffs
    poly = ChebyshevPolynomial(full, parity if parity != "none" else "none", problem.cap)
    result = MinimaxResult(poly=poly, objective=float(t), fine_error=float(np.max(err, initial=0.0)),
                           grid_size=int(len(active)), refinements=rounds)
    if cache_key is not None:
        _CACHE[cache_key] = result
        if len(_CACHE) > _CACHE_SIZE:
            _CACHE.popitem(last=False)
    return result


# below this the LP solution itself is only accurate to rounding, and more
# grid points just slow the solve down
_NOISE_FLOOR = 2e-10

_TIGHT = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _solve_lp(problem: MinimaxProblem, x: np.ndarray, ks: np.ndarray, node_cap: float):
    inside = problem.approximation_mask(x)
    xa, xc = x[inside], x
    f = problem.target(xa)
    w = problem.weight(xa) if problem.weight is not None else np.ones_like(xa)
    keep = w > 0
    xa, f, w = xa[keep], f[keep], w[keep]
    Ba = _basis(xa, ks)
    Bc = _basis(xc, ks)
    n = len(ks)
    zc = np.zeros((len(xc), 1))
    rows = [
        np.hstack([Ba, -w[:, None]]),
        np.hstack([-Ba, -w[:, None]]),
        np.hstack([Bc, zc]),
        np.hstack([-Bc, zc]),
    ]
    rhs = [f, -f, np.full(len(xc), node_cap), np.full(len(xc), node_cap)]
    if problem.origin_slope is not None:
        s = problem.origin_slope
        # T_k'(0) = k (-1)^((k-1)/2) for odd k
        deriv = np.where(ks % 2 == 1, ks * (-1.0) ** ((ks - 1) // 2), 0.0)
        rows += [np.append(deriv, -s)[None, :], np.append(-deriv, -s)[None, :]]
        rhs += [[s], [-s]]
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    c = np.zeros(n + 1)
    c[-1] = 1.0
    bounds = [(None, None)] * n + [(0, None)]
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs", options=_TIGHT)
    if res.status == 4:
        # tight tolerances occasionally stall; the default ones always finish
        res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status == 2:
        raise InfeasibleError(f"minimax LP is infeasible at degree {int(ks[-1])}; try a higher degree")
    if res.x is None:
        raise InfeasibleError(f"minimax LP failed: {res.message}")
    return res.x[:-1], float(res.x[-1])


def minimax_error(poly: ChebyshevPolynomial, problem: MinimaxProblem, points: int = 200_001) -> float:
    """Weighted sup-error of ``poly`` on the problem's intervals, dense sampling."""
    worst = 0.0
    for lo, hi in problem.intervals:
        xs = np.linspace(lo, hi, points)
        worst = max(worst, float(np.max(problem.weighted_error(xs, poly(xs)))))
    return worst


# -- smoothed-rectangle reference -------------------------------------------------

_SERIES_POINTS = 1 << 16


def _chebyshev_series(fn: Callable[[np.ndarray], np.ndarray], n: int = _SERIES_POINTS) -> np.ndarray:
    """Chebyshev coefficients of ``fn`` from its values at ``n + 1`` extreme points."""
    xs = np.cos(np.pi * np.arange(n + 1) / n)
    a = scipy.fft.dct(fn(xs), type=1) / n
    a[0] /= 2
    a[-1] /= 2
    return a


@dataclass(frozen=True)
class ErfReference:
    poly: ChebyshevPolynomial
    degree: int
    error: float
    steepness: float


def rect_parameters(gamma: float, delta: float, eps: float) -> tuple[float, float, float]:
    """Edge, half-width and erf steepness of the smoothed rectangle.

    The slope of the line is ``s = (1 - delta) * gamma``. The rectangle
    edge sits midway between the window end ``1/gamma`` and ``1/s`` (where
    the line reaches one), the transition half-width is ``delta / (2 s)`` and
    the steepness makes the erf pair accurate to ``eps`` outside it.
    """
    slope = (1 - delta) * gamma
    edge = (1 - delta / 2) / slope
    half_width = delta / (2 * slope)
    steepness = math.sqrt(2.0) / half_width * math.sqrt(math.log(2.0 / (math.pi * eps * eps)))
    return edge, half_width, steepness


class _SmoothedRect:
    """``(1 - delta) * gamma * x`` times an erf-smoothed rectangle, as a Chebyshev series."""

    def __init__(self, gamma: float, delta: float, eps: float):
        self.gamma, self.delta = gamma, delta
        self.slope = (1 - delta) * gamma
        edge, _, k = rect_parameters(gamma, delta, eps)
        self.steepness = k
        self.rect = _chebyshev_series(lambda x: 0.5 * (erf(k * (x + edge)) - erf(k * (x - edge))))
        self.rect[1::2] = 0.0

    def poly(self, degree: int) -> ChebyshevPolynomial:
        p = cheb.chebmulx(self.rect[:degree]) * self.slope
        p = p[: degree + 1]
        p[0::2] = 0.0
        return ChebyshevPolynomial(p, "odd", 1.0)


def _window_error(poly: ChebyshevPolynomial, gamma: float, delta: float, points: int = 4001) -> float:
    xs = np.linspace(0.0, 1.0 / gamma, points)
    return float(np.max(np.abs(poly(xs) - (1 - delta) * gamma * xs)))


def erf_reference_poly(gamma: float, delta: float, eps: float) -> ErfReference:
    """Smallest-degree truncation of the smoothed-rectangle series with window error <= ``eps``."""
    if not 0 < eps < 0.5:
        raise InputError("eps must lie in (0, 1/2)")
    shape = _SmoothedRect(gamma, delta, eps)
    lo, hi = 1, 3
    while _window_error(shape.poly(hi), gamma, delta) > eps:
        lo, hi = hi + 2, 2 * hi + 1
        if hi >= _SERIES_POINTS:
            raise InputError("smoothed-rectangle series did not reach the tolerance")
    while lo < hi:
        mid = (lo + hi) // 2
        mid += 1 - mid % 2
        if mid >= hi:
            mid = hi - 2
        if mid < lo:
            break
        if _window_error(shape.poly(mid), gamma, delta) <= eps:
            hi = mid
        else:
            lo = mid + 2
    poly = shape.poly(hi)
    poly = ChebyshevPolynomial(poly.coefficients, "odd", poly.sup_norm())
    return ErfReference(poly=poly, degree=hi, error=_window_error(poly, gamma, delta),
                        steepness=shape.steepness)


def erf_error_at_degree(gamma: float, delta: float, degree: int, eps: float = 1e-3) -> float:
    """Window error of the degree-``degree`` truncation of the smoothed-rectangle series."""
    return _window_error(_SmoothedRect(gamma, delta, eps).poly(degree), gamma, delta)


@dataclass(frozen=True)
class SweepRow:
    degree: int
    lp_error: float
    erf_error: float


def degree_sweep(gamma: float, delta: float, degrees: Sequence[int],
                 eps: float = 1e-3) -> list[SweepRow]:
    """Window error versus degree for the LP and smoothed-rectangle constructions."""
    problem = amplification_target(gamma, delta)
    shape = _SmoothedRect(gamma, delta, eps)
    rows = []
    for d in degrees:
        lp = solve_minimax(problem, d)
        rows.append(SweepRow(int(d), lp.fine_error, _window_error(shape.poly(d), gamma, delta)))
    return rows
