"""Singular value transformation on block encodings, done at matrix level.

A degree-``d`` odd polynomial applied to an encoded block costs ``d`` uses of
the input encoding and one extra ancilla. Here the transformed block is
formed from an SVD and then dilated, which gives the same encoded operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as cheb

from .block_encoding import BlockEncoding, dilate, pad_ancillas
from .errors import CapViolationError, ConditioningError, InputError, PreconditionError
from .linalg import spectral_norm, svd
from .minimax import (
    ChebyshevPolynomial,
    amplification_target,
    inverse_target,
    solve_minimax,
)


@dataclass
class CostReport:
    queries_to_input: int
    ancillas_added: int
    degree: int = 0
    notes: dict = field(default_factory=dict)


def _transform_block(block: np.ndarray, poly: ChebyshevPolynomial) -> np.ndarray:
    f = svd(block)
    vals = poly(np.clip(f.s, 0.0, 1.0))
    # negative values stay in the left factor, so this is W p(S) V^dagger
    return (f.W * vals) @ f.Vh


def _check_cap(poly: ChebyshevPolynomial):
    if poly.parity != "odd":
        raise InputError("singular value transformation needs an odd polynomial")
    sup = poly.sup_norm()
    if sup > 1 + 1e-9:
        raise CapViolationError(f"polynomial reaches {sup:.6g} > 1 on [-1, 1]")


def apply_svt(be: BlockEncoding, poly: ChebyshevPolynomial) -> tuple[BlockEncoding, CostReport]:
    """Exact ``(1, m + 1, 0)`` encoding of ``W p(S) V^dagger`` for the block ``W S V^dagger``."""
    _check_cap(poly)
    new = _transform_block(be.block, poly)
    out = pad_ancillas(dilate(new, 1.0, target=new), be.m)
    return out, CostReport(poly.degree, 1, poly.degree)


def _odd(d: float) -> int:
    d = int(math.ceil(d))
    return d + 1 - d % 2


def smallest_degree(error: Callable[[int], float], tol: float, max_degree: int = 2001) -> int:
    """Smallest odd degree whose ``error`` is at most ``tol``.

    ``error`` is assumed to decrease roughly geometrically in the degree, so
    each new trial is placed by interpolating the logarithm of the error
    between the tightest failing and passing degrees found so far.
    """
    if error(1) <= tol:
        return 1
    lo, e_lo = 1, error(1)
    hi, e_hi = None, None
    d = 15
    while hi is None:
        d = min(d, max_degree)
        e = error(d)
        if e <= tol:
            hi, e_hi = d, e
        elif d >= max_degree:
            raise PreconditionError(f"no polynomial of degree <= {max_degree} meets the tolerance")
        else:
            if e < e_lo and e > 0:
                # extrapolate the geometric decay, with a little overshoot
                rate = (math.log(e_lo) - math.log(e)) / (d - lo)
                guess = d + (math.log(e) - math.log(tol)) / rate if rate > 0 else 2 * d
                lo, e_lo = d, e
                d = _odd(min(max(1.15 * guess, d + 2), 4 * d + 1))
            else:
                lo, e_lo = d, e
                d = 2 * d + 1
    while hi - lo > 2:
        if e_lo > 0 and e_hi > 0 and e_lo > e_hi:
            frac = (math.log(e_lo) - math.log(tol)) / (math.log(e_lo) - math.log(e_hi))
            d = _odd(lo + frac * (hi - lo))
        else:
            d = _odd((lo + hi) / 2)
        d = min(max(d, lo + 2), hi - 2)
        e = error(d)
        if e <= tol:
            hi, e_hi = d, e
        else:
            lo, e_lo = d, e
    return hi


@dataclass
class AmplificationResult:
    encoding: BlockEncoding
    cost: CostReport
    gain: float
    poly: ChebyshevPolynomial
    relative_error: float


GAIN_GRID = 1.02
# polynomial errors below this are not resolved reliably by the LP solver
MIN_POLY_TOL = 1e-10


def quantized_gain(gain: float) -> float:
    """Round a gain up to the geometric grid ``GAIN_GRID ** k``."""
    if gain <= 1 + 1e-12:
        return 1.0
    k = math.ceil(math.log(gain) / math.log(GAIN_GRID) - 1e-9)
    return GAIN_GRID ** k


def rescale_argument(poly: ChebyshevPolynomial, factor: float) -> ChebyshevPolynomial:
    """The polynomial ``x -> poly(factor * x)`` for ``0 < factor <= 1``.

    Parity, degree and the bound on ``[-1, 1]`` are all preserved.
    """
    if not 0 < factor <= 1:
        raise InputError("factor must lie in (0, 1]")
    if factor == 1:
        return poly
    coeffs = cheb.chebinterpolate(lambda x: cheb.chebval(factor * x, poly.coefficients), poly.degree)
    if poly.parity == "odd":
        coeffs[0::2] = 0.0
    elif poly.parity == "even":
        coeffs[1::2] = 0.0
    return ChebyshevPolynomial(coeffs, poly.parity, poly.cap)


def amplification_poly(gain: float, delta: float, eps_prime: float,
                       max_degree: int = 2001) -> tuple[ChebyshevPolynomial, float]:
    """Lowest-degree odd polynomial within relative error ``eps_prime`` of
    ``(1 - delta) * gain * x`` on ``[0, 1/gain]`` and bounded on ``[-1, 1]``.

    The LP is solved for the gain rounded up to the grid and the result is
    rescaled in its argument, so nearby gains share one solution.
    """
    if eps_prime < MIN_POLY_TOL:
        raise PreconditionError(f"relative tolerance {eps_prime:.2e} is below {MIN_POLY_TOL:.0e}")
    gq = quantized_gain(gain)
    problem = amplification_target(gq, delta, relative=True)
    degree = smallest_degree(lambda d: solve_minimax(problem, d).fine_error, eps_prime, max_degree)
    result = solve_minimax(problem, degree)
    return rescale_argument(result.poly, gain / gq), result.fine_error


def uniform_amplify(be: BlockEncoding, delta: float, eps_prime: float,
                    max_degree: int = 2001) -> AmplificationResult:
    """Raise the subnormalization of an exact encoding to ``||X|| / (1 - delta)``.

    ``X`` is the encoded operator. Every singular value of ``X`` is
    reproduced to relative error ``eps_prime`` by an odd polynomial that is
    linear with slope ``(1 - delta) * gain`` on ``[0, 1/gain]``, where
    ``gain = alpha / ||X||``.
    """
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    if not eps_prime > 0:
        raise InputError("eps_prime must be positive")
    X = be.encoded
    norm = spectral_norm(X)
    if norm == 0:
        raise PreconditionError("cannot amplify the zero operator")
    gain = max(1.0, be.alpha / norm)
    poly, window_error = amplification_poly(gain, delta, eps_prime, max_degree)
    slope = (1 - delta) * gain
    sv = svd(be.block).s
    sv = sv[sv > 0]
    rel = float(np.max(np.abs(poly(sv) - slope * sv) / (slope * sv)))
    new = _transform_block(be.block, poly)
    out = pad_ancillas(dilate(new, 1.0), be.m)
    out.alpha = norm / (1 - delta)
    out.eps = eps_prime * norm
    out.target = X
    cost = CostReport(poly.degree, 1, poly.degree, {"gain": gain, "window_error": window_error})
    return AmplificationResult(out, cost, gain, poly, rel)


def invert(be: BlockEncoding, eps: float, norm_inv_bound: float,
           max_degree: int = 2001) -> tuple[BlockEncoding, CostReport]:
    """``(4 kappa / 3, m + 1, eps)`` encoding of the inverse, ``kappa = norm_inv_bound``.

    Singular values of the block must be at least ``1 / (alpha kappa)``.
    """
    if not eps > 0:
        raise InputError("eps must be positive")
    if not norm_inv_bound > 0:
        raise InputError("norm_inv_bound must be positive")
    delta = 1.0 / (be.alpha * norm_inv_bound)
    if delta > 1 + 1e-12:
        raise PreconditionError("inverse-norm bound is below 1/alpha, which is impossible")
    delta = min(delta, 1.0)
    f = svd(be.block)
    if np.min(f.s) < delta * (1 - 1e-9):
        raise ConditioningError(
            f"smallest singular value {np.min(f.s):.3e} below threshold {delta:.3e}")
    tol = 0.75 * eps / norm_inv_bound
    if tol < MIN_POLY_TOL:
        raise PreconditionError(f"polynomial tolerance {tol:.2e} is below {MIN_POLY_TOL:.0e}")
    problem = inverse_target(delta)
    degree = smallest_degree(lambda d: solve_minimax(problem, d).fine_error, tol, max_degree)
    result = solve_minimax(problem, degree)
    new = _transform_block(be.block, result.poly).conj().T
    out = pad_ancillas(dilate(new, 1.0), be.m)
    out.alpha = 4.0 * norm_inv_bound / 3.0
    out.eps = float(eps)
    out.target = np.linalg.inv(be.target) if be.target is not None and be.eps == 0 else None
    cost = CostReport(degree, 1, degree, {"threshold": delta, "lp_error": result.fine_error})
    return out, cost
