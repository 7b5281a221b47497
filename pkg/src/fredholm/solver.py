"""Fredholm dichotomy for ``(I - T) x = y``.

With a splitting ``T = F + K`` put ``R = I - K`` (invertible by the Neumann
series) and ``S = F R^-1``.  Then ``I - T = (I - S) R`` and the range of ``S``
lies in ``span{u_i}``, the left vectors of ``F``.  ``I - S`` maps that span to
itself, and injectivity/surjectivity of ``I - S`` on the whole space is decided
by the ``r x r`` matrix ``A = I - B``, ``B[i, j] = <v_i, R^-1 u_j>``:

* ``A`` nonsingular: lift ``y`` to ``y + w`` with ``(I - S)(y + w) = y`` and
  return ``x = R^-1 (y + w)``;
* ``A`` singular: a null vector ``c`` gives ``w = sum c_j u_j`` with ``S w = w``
  and ``y* = R^-1 w`` is a fixed vector of ``T``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .approximation import DEFAULT_THETA, split
from .errors import (
    AmbiguousSingularity,
    CertificationFailed,
    DegenerateBasis,
    ResidualCheckFailed,
)
from .neumann import neumann_block
from .operators import CoeffVector, _gram, apply, extend

DEFAULT_TOL = 1e-8
#: sigma_min below SINGULAR_REL * (1 + ||A||) means "fixed vector".
SINGULAR_REL = 1e-10
#: sigma_min in [SINGULAR_REL, GRAY_REL] * (1 + ||A||) is refused.
GRAY_REL = 1e-6
#: Smallest series tolerance worth asking for in double precision.
EPS_FLOOR = 1e-14


def default_neumann_eps(tol, r):
    return max(tol / (100.0 * max(r, 1)), EPS_FLOOR)


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """Matrix of ``(I - S)`` restricted to ``span{u_i}``.

    ``basis_vectors`` are the (orthonormal) left vectors of ``F``; column ``j``
    of ``A`` holds the coordinates of ``(I - S) u_j``.
    """

    splitting: object
    B: np.ndarray
    A: np.ndarray
    sigma_min: float
    a_norm: float
    neumann_eps: float
    neumann_terms: int

    @property
    def r(self):
        return self.A.shape[0]

    @property
    def basis_vectors(self):
        return self.splitting.F.left

    @property
    def functionals(self):
        return self.splitting.F.right

    @property
    def singular_threshold(self):
        return SINGULAR_REL * (1.0 + self.a_norm)

    @property
    def gray_threshold(self):
        return GRAY_REL * (1.0 + self.a_norm)

    def is_singular(self):
        """``True`` for the fixed-vector branch, ``False`` for the solution branch.

        Raises :class:`AmbiguousSingularity` inside the gray zone.
        """
        if self.sigma_min < self.singular_threshold:
            return True
        if self.sigma_min <= self.gray_threshold:
            raise AmbiguousSingularity(
                self.sigma_min, self.singular_threshold, self.gray_threshold
            )
        return False


@dataclass(frozen=True)
class Diagnostics:
    resolution: object
    kappa: float
    r: int
    sigma_min: float
    neumann_terms: int
    neumann_eps: float
    method: str
    inverse_bound: float = None
    extras: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Outcome:
    diagnostics: Diagnostics


@dataclass(frozen=True, eq=False)
class Solution(Outcome):
    """``(I - T) x = y`` with ``residual = ||(I - T) x - y||``."""

    x: CoeffVector
    residual: float
    kind = "solution"


@dataclass(frozen=True, eq=False)
class FixedVector(Outcome):
    """Unit vector with ``T y_star = y_star`` up to ``residual``."""

    y_star: CoeffVector
    residual: float
    kind = "fixed_vector"


def reduce(sp, neumann_eps):
    """Build the reduced system of a splitting."""
    F = sp.F
    basis = F.basis
    r = F.rank
    if r == 0:
        probe = np.ones(basis.dim, dtype=complex)
        if np.any(F._matvec(probe, basis)):
            raise DegenerateBasis("every left vector was pruned from a nonzero F")
        empty = np.zeros((0, 0), dtype=complex)
        return ReducedSystem(sp, empty, empty, np.inf, 0.0, neumann_eps, 0)
    Z, terms = neumann_block(sp.K, sp.kappa, F.left, basis, neumann_eps)
    B = _gram(basis, F.right, Z)
    A = np.eye(r) - B
    s = np.linalg.svd(A, compute_uv=False)
    return ReducedSystem(sp, B, A, float(s[-1]), float(s[0]), neumann_eps, terms)


def resolvent(rs, y, eps=None):
    """``R^-1 y`` through the Neumann series of the splitting."""
    sp = rs.splitting
    Z, _ = neumann_block(sp.K, sp.kappa, y.coeffs, y.basis, eps or rs.neumann_eps)
    return CoeffVector(y.basis, Z[:, 0])


def apply_S(sp, z, eps):
    """``S z = F R^-1 z``."""
    Z, _ = neumann_block(sp.K, sp.kappa, z.coeffs, z.basis, eps)
    return apply(sp.F, CoeffVector(z.basis, Z[:, 0]))


def _diagnostics(rs, **kw):
    sp = rs.splitting
    return Diagnostics(
        resolution=sp.basis,
        kappa=sp.kappa,
        r=rs.r,
        sigma_min=rs.sigma_min,
        neumann_terms=rs.neumann_terms,
        neumann_eps=rs.neumann_eps,
        method=sp.method,
        **kw,
    )


def _residual(T, x, y):
    return (x - apply(T, x) - y).norm()


def extract_fixed_vector(rs, sp=None, tol=DEFAULT_TOL):
    """Fixed vector of ``T`` from the smallest right singular vector of ``A``."""
    sp = sp or rs.splitting
    basis = sp.basis
    if rs.r == 0:
        raise CertificationFailed("S = 0, so I - S = I has no null vector")
    _, _, Vh = np.linalg.svd(rs.A)
    c = Vh[-1].conj()
    w = CoeffVector(basis, rs.basis_vectors @ c)
    y = resolvent(rs, w)
    y = y / y.norm()
    residual = _residual(sp.T, y, CoeffVector.zeros(basis))
    if residual > tol:
        raise CertificationFailed(f"||T y* - y*|| = {residual:.3e} > tol = {tol:.1e}")
    return y


def _lift(rs, y):
    """Solve ``(I - S) u = y`` on the whole space; returns ``(u, w)``."""
    basis = y.basis
    Ry = resolvent(rs, y)
    c = _gram(basis, rs.functionals, Ry.coeffs[:, None])[:, 0]
    coords = np.linalg.solve(rs.A, c)
    w = CoeffVector(basis, rs.basis_vectors @ coords)
    return y + w, w


def solve_reduced(rs, y, tol=DEFAULT_TOL):
    """Dichotomy for a fixed right-hand side on a precomputed reduction."""
    sp = rs.splitting
    if sp.basis != y.basis:
        apply(sp.F, y)  # raises the appropriate mismatch
    if rs.r and rs.is_singular():
        y_star = extract_fixed_vector(rs, sp, tol)
        residual = _residual(sp.T, y_star, CoeffVector.zeros(y.basis))
        return FixedVector(_diagnostics(rs), y_star, residual)

    ynorm = y.norm()
    for attempt in range(2):
        if rs.r:
            u, w = _lift(rs, y)
        else:
            u, w = y, CoeffVector.zeros(y.basis)
        x = resolvent(rs, u)
        residual = _residual(sp.T, x, y)
        if residual <= tol * ynorm:
            break
        # tighten the series once, in proportion to the conditioning of A
        eps = max(rs.neumann_eps * min(1.0, rs.sigma_min / (1 + rs.a_norm)) * 0.1, EPS_FLOOR)
        if attempt or eps >= rs.neumann_eps:
            raise ResidualCheckFailed(
                f"||(I - T) x - y|| = {residual:.3e} exceeds tol*||y|| = {tol * ynorm:.3e}"
            )
        rs = reduce(sp, eps)
    bound = (ynorm + w.norm()) / (1.0 - sp.kappa)
    return Solution(_diagnostics(rs, inverse_bound=bound), x, residual)


def solve(T, y, theta=DEFAULT_THETA, tol=DEFAULT_TOL, neumann_eps=None):
    """Solve ``(I - T) x = y`` or exhibit a unit ``y*`` with ``T y* = y*``."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    sp = split(T, theta, y.basis)
    eps = neumann_eps if neumann_eps is not None else default_neumann_eps(tol, sp.F.rank)
    return solve_reduced(reduce(sp, eps), y, tol)


@dataclass(frozen=True)
class CertificateReport:
    kind: str
    residual: float
    resolution: object
    residual_doubled: float = None
    resolution_doubled: object = None


def certify(T, outcome, y=None, rhs=None):
    """Recompute the outcome's residual, and at doubled resolution if possible.

    ``rhs`` may be a callable ``basis -> CoeffVector`` producing the right-hand
    side at any resolution; it is needed for the doubled check of a solution.
    The refined vector is the Nystrom extension ``y + T x`` (or ``T y*``).
    """
    if isinstance(outcome, Solution):
        x = outcome.x
        basis = x.basis
        if y is None:
            if rhs is None:
                raise ValueError("certifying a solution needs y or rhs")
            y = rhs(basis)
        residual = _residual(T, x, y)
        fine = basis.doubled()
        if rhs is None or fine is None or not T.refinable:
            return CertificateReport("solution", residual, basis)
        y_f = rhs(fine)
        x_f = y_f + extend(T, x, fine)
        return CertificateReport("solution", residual, basis, _residual(T, x_f, y_f), fine)

    y_star = outcome.y_star
    basis = y_star.basis
    zero = CoeffVector.zeros(basis)
    residual = _residual(T, y_star, zero)
    fine = basis.doubled()
    if fine is None or not T.refinable:
        return CertificateReport("fixed_vector", residual, basis)
    y_f = extend(T, y_star, fine)
    y_f = y_f / y_f.norm()
    return CertificateReport(
        "fixed_vector", residual, basis, _residual(T, y_f, CoeffVector.zeros(fine)), fine
    )


def with_extras(outcome, **extras):
    """Copy of ``outcome`` with extra diagnostic entries."""
    diag = replace(outcome.diagnostics, extras={**outcome.diagnostics.extras, **extras})
    return replace(outcome, diagnostics=diag)
