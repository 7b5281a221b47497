"""Negative-order operators on the circle: Sobolev norms and regularity.

A :class:`CircleOperator` is a Fourier multiplier of order ``m < 0`` plus an
optional smoothing finite-rank part with rapidly decaying coefficients.
Smoothness is read off coefficient decay: faster than ``(1 + |n|)^-6`` on the
resolved window counts as smooth.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .approximation import DEFAULT_THETA
from .errors import BootstrapViolated, InsufficientSupport, NegativeS
from .operators import (
    FOURIER,
    CoeffVector,
    DiagonalMultiplier,
    FiniteRankOperator,
    SeparableKernel,
    Sum,
    apply,
)
from .solver import DEFAULT_TOL, Solution, solve, with_extras

SMOOTH_DECAY = 6
SOBOLEV_READINGS = (0, 1, 2, 4)


@dataclass(frozen=True, eq=False)
class CircleOperator:
    multiplier: DiagonalMultiplier
    smoothing: object = None
    decay: float = SMOOTH_DECAY
    operator: object = field(init=False)

    def __post_init__(self):
        m = self.multiplier
        if not m.order < 0:
            raise ValueError("the multiplier must have negative order")
        if m.constant is None:
            raise ValueError("the multiplier needs an envelope constant C")
        if self.decay < SMOOTH_DECAY:
            raise ValueError(f"smoothing factors must decay at least like |n|^-{SMOOTH_DECAY}")
        op = m
        if self.smoothing is not None:
            if not isinstance(self.smoothing, (SeparableKernel, FiniteRankOperator)):
                raise TypeError("smoothing must be a finite-rank presentation")
            if self.smoothing.basis_kind != FOURIER:
                raise ValueError("smoothing must act in the Fourier basis")
            op = Sum(m, self.smoothing)
        object.__setattr__(self, "operator", op)

    @property
    def order(self):
        return self.multiplier.order

    @property
    def constant(self):
        return self.multiplier.constant


class SobolevReading(NamedTuple):
    s: float
    value: float
    resolution: int


def _sobolev(x, s):
    n = x.basis.nodes
    return float(np.sqrt(np.sum((1.0 + n.astype(float) ** 2) ** s * np.abs(x.coeffs) ** 2)))


def _fourier_only(x):
    if x.basis.kind != FOURIER:
        raise ValueError("Sobolev norms need Fourier coefficients")


def sobolev_norm(x, s):
    """``(sum (1 + n^2)^s |x_n|^2)^(1/2)`` over the stored modes."""
    _fourier_only(x)
    if s < 0:
        raise NegativeS(f"s must be >= 0, got {s}")
    return SobolevReading(s, _sobolev(x, s), x.resolution)


def solve_smooth(P, x_rhs, tol=DEFAULT_TOL, theta=DEFAULT_THETA):
    """Solve ``(I - P) y = x`` on L2; solutions carry Sobolev readings."""
    _fourier_only(x_rhs)
    outcome = solve(P.operator, x_rhs, theta=theta, tol=tol)
    if isinstance(outcome, Solution):
        readings = {s: sobolev_norm(outcome.x, s).value for s in SOBOLEV_READINGS}
        outcome = with_extras(outcome, sobolev=readings)
    return outcome


class BootstrapStep(NamedTuple):
    s: float
    solution_norm: float
    rhs_norm: float
    gain_term: float
    smoothing_term: float
    ok: bool


@dataclass(frozen=True)
class BootstrapReport:
    steps: list
    equation_residual: float
    slack: float

    @property
    def passed(self):
        return all(step.ok for step in self.steps)


def bootstrap_check(P, x_rhs, y_solution, steps=4, slack=0.1):
    """Check ``||y||_{H^s} <= ||x||_{H^s} + C ||y||_{H^(s-|m|)} + ||G y||_{H^s}``.

    ``s`` runs over ``k |m|`` for ``k = 0..steps``; ``G`` is the smoothing part
    (its norm is measured, not bounded).  Each inequality may be missed by at
    most ``slack`` (relative) before :class:`BootstrapViolated` is raised.
    """
    _fourier_only(x_rhs)
    gain = abs(P.order)
    C = P.constant
    Gy = apply(P.smoothing, y_solution) if P.smoothing is not None else None
    residual = (y_solution - apply(P.operator, y_solution) - x_rhs).norm()
    chain = []
    for k in range(steps + 1):
        s = k * gain
        lhs = _sobolev(y_solution, s)
        rhs_x = _sobolev(x_rhs, s)
        gain_term = C * _sobolev(y_solution, s - gain)
        smooth = _sobolev(Gy, s) if Gy is not None else 0.0
        ok = lhs <= (1 + slack) * (rhs_x + gain_term + smooth) + 1e-300
        chain.append(BootstrapStep(s, lhs, rhs_x, gain_term, smooth, ok))
        if not ok:
            raise BootstrapViolated(
                f"at s={s:g}: ||y||={lhs:.6e} > (1+{slack})*"
                f"({rhs_x:.6e} + {gain_term:.6e} + {smooth:.6e})"
            )
    return BootstrapReport(chain, residual, slack)


class DecayFit(NamedTuple):
    slope: float
    residual: float
    points: int


def decay_exponent(x, lo=4, hi=None, min_points=8):
    """Least-squares slope of ``log |x_n|`` against ``log(1 + |n|)``.

    The window is ``lo <= |n| <= hi`` (default ``hi = N // 2``); zero
    coefficients are skipped.
    """
    _fourier_only(x)
    hi = x.resolution // 2 if hi is None else hi
    n = np.abs(x.basis.nodes)
    mag = np.abs(x.coeffs)
    sel = (n >= lo) & (n <= hi) & (mag > 0)
    if np.count_nonzero(sel) < min_points:
        raise InsufficientSupport(
            f"{np.count_nonzero(sel)} nonzero coefficients in {lo} <= |n| <= {hi}, need {min_points}"
        )
    X = np.log1p(n[sel])
    Y = np.log(mag[sel])
    slope, intercept = np.polyfit(X, Y, 1)
    fit = float(np.sqrt(np.mean((Y - (slope * X + intercept)) ** 2)))
    return DecayFit(float(slope), fit, int(np.count_nonzero(sel)))


def power_decay(basis, exponent):
    """Vector with coefficients ``(1 + |n|)^-exponent``."""
    return CoeffVector.from_function(lambda n: (1.0 + np.abs(n)) ** -float(exponent), basis)
