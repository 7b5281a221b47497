"""Executable Fredholm alternative for ``(I - T) x = y`` with compact ``T``.

Split ``T = F + K`` with ``||K|| < 1``, invert ``R = I - K`` by a Neumann
series, and decide the problem on the ``r x r`` matrix of ``I - F R^-1``
restricted to the range of ``F``.  The answer is either a :class:`Solution`
or a :class:`FixedVector` of ``T``.
"""

from .approximation import (
    Splitting,
    bap_convergence_probe,
    fourier_project,
    observed_orders,
    split,
    svd_truncate,
)
from .circle import (
    CircleOperator,
    bootstrap_check,
    decay_exponent,
    power_decay,
    sobolev_norm,
    solve_smooth,
)
from .errors import *  # noqa: F401,F403
from .estimator import FredholmSolver
from .lab import corollary_check, dense_oracle_solve, lemma_equivalences, lemma_suite, restrict_to_range
from .neumann import apply_inverse, terms_needed
from .operators import (
    Basis,
    CoeffVector,
    DiagonalMultiplier,
    FiniteMatrix,
    FiniteRankOperator,
    SampledKernel,
    Scaled,
    SeparableKernel,
    Sum,
    apply,
    euclidean,
    fourier,
    grid,
    norm_upper_bound,
    pair,
)
from .problem import ProblemSpec, parse_problem, run, serialize
from .solver import FixedVector, Solution, certify, reduce, solve

__version__ = "0.1.0"
