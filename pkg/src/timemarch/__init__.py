"""Matrix-level simulator for time-marching solvers of linear ODEs ``psi' = A(t) psi``.

Every operator in the pipeline is built as an explicit matrix and checked
against brute-force references: block encodings, amplification
polynomials, the counter compression gadget, Dyson and Magnus short-time
integrators and contour-integral exponentials.
"""

from .block_encoding import BlockEncoding, build_mat_encoding, compact, dilate, verify
from .errors import (
    ConfigError,
    ConvergenceError,
    InputError,
    PreconditionError,
    TimeMarchError,
)
from .families import make_family
from .gadget import compress, long_time_compose
from .linalg import TimeDependentMatrix, TimeGrid, matrix_exp, spectral_norm, time_ordered_exp
from .minimax import ChebyshevPolynomial, solve_minimax
from .solver import (
    SolveReport,
    amplification_ratio,
    amplitude_amplify,
    build_mesh,
    solve,
    solve_dyson,
    solve_magnus,
    success_probability,
)
from .svt import apply_svt, invert, uniform_amplify

__version__ = "0.1.0"

__all__ = [
    "BlockEncoding", "ChebyshevPolynomial", "ConfigError", "ConvergenceError", "InputError",
    "PreconditionError", "SolveReport", "TimeDependentMatrix", "TimeGrid", "TimeMarchError",
    "amplification_ratio", "amplitude_amplify", "apply_svt", "build_mat_encoding", "build_mesh",
    "compact", "compress", "dilate", "invert", "long_time_compose", "make_family", "matrix_exp",
    "solve", "solve_dyson", "solve_magnus", "solve_minimax", "spectral_norm", "success_probability",
    "time_ordered_exp", "uniform_amplify", "verify",
]
