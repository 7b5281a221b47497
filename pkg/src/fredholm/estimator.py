"""Estimator-style front end.

``FredholmSolver().fit(T, basis)`` splits ``T`` and builds the reduced
system once; ``solve`` and ``transform`` then reuse it for any number of
right-hand sides::

    est = FredholmSolver(tol=1e-10).fit(T, grid(64))
    out = est.solve(y)          # Solution or FixedVector
    X = est.transform(Y)        # columns of Y -> columns of X
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .approximation import DEFAULT_THETA, split
from .errors import BasisMismatch
from .operators import Basis, CoeffVector, Operator
from .solver import (
    DEFAULT_TOL,
    FixedVector,
    default_neumann_eps,
    extract_fixed_vector,
    reduce,
    solve_reduced,
)


class FredholmSolver(BaseEstimator):
    """Solve ``(I - T) x = y`` for a fixed ``T`` and many ``y``.

    Parameters
    ----------
    theta : float
        Target for ``||K||`` in the splitting, in ``(0, 1)``.
    tol : float
        Relative residual demanded of solutions.
    neumann_eps : float or None
        Series tolerance; ``None`` picks one from ``tol`` and the rank.

    Attributes
    ----------
    split_ : Splitting
    reduced_ : ReducedSystem
    basis_ : Basis
    singular_ : bool
        ``True`` when ``I - T`` has a (numerical) fixed vector.
    """

    def __init__(self, theta=DEFAULT_THETA, tol=DEFAULT_TOL, neumann_eps=None):
        self.theta = theta
        self.tol = tol
        self.neumann_eps = neumann_eps

    def _validate_params(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.neumann_eps is not None and not 0 < self.neumann_eps < 1:
            raise ValueError(f"neumann_eps must lie in (0, 1), got {self.neumann_eps}")

    def fit(self, T, basis=None):
        """Split ``T`` on ``basis`` and reduce.  Returns ``self``."""
        self._validate_params()
        if not isinstance(T, Operator):
            raise TypeError(f"expected an operator, got {type(T).__name__}")
        if basis is not None and not isinstance(basis, Basis):
            raise TypeError("basis must be a Basis")
        sp = split(T, self.theta, basis)
        eps = self.neumann_eps or default_neumann_eps(self.tol, sp.F.rank)
        self.operator_ = T
        self.split_ = sp
        self.basis_ = sp.basis
        self.reduced_ = reduce(sp, eps)
        self.singular_ = bool(self.reduced_.r) and self.reduced_.is_singular()
        return self

    def _as_vector(self, y):
        if isinstance(y, CoeffVector):
            if y.basis != self.basis_:
                raise BasisMismatch(f"expected a vector on {self.basis_}, got {y.basis}")
            return y
        y = np.asarray(y)
        if y.shape != (self.basis_.dim,):
            raise ValueError(f"expected {self.basis_.dim} coefficients, got shape {y.shape}")
        return CoeffVector(self.basis_, y)

    def solve(self, y):
        """``Solution`` or ``FixedVector`` for one right-hand side."""
        check_is_fitted(self, "reduced_")
        return solve_reduced(self.reduced_, self._as_vector(y), self.tol)

    def transform(self, Y):
        """Solve for every column of ``Y`` (shape ``(dim, k)``).

        Raises if ``I - T`` is singular; use :meth:`fixed_vector` there.
        """
        check_is_fitted(self, "reduced_")
        Y = np.asarray(Y)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.shape[0] != self.basis_.dim:
            raise ValueError(f"expected shape ({self.basis_.dim}, k), got {Y.shape}")
        cols = []
        for j in range(Y.shape[1]):
            out = self.solve(Y[:, j])
            if isinstance(out, FixedVector):
                raise ValueError("I - T is singular; no solutions to return")
            cols.append(out.x.coeffs)
        return np.stack(cols, axis=1) if cols else np.zeros((self.basis_.dim, 0), dtype=complex)

    def fixed_vector(self):
        """Unit ``y*`` with ``T y* = y*`` (singular case only)."""
        check_is_fitted(self, "reduced_")
        if not self.singular_:
            raise ValueError("I - T is invertible; there is no fixed vector")
        return extract_fixed_vector(self.reduced_, tol=self.tol)
