"""Resolvent ``(I - K)^-1`` by a truncated geometric series with an a-priori bound."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import KappaOutOfRange, ResidualCheckFailed
from .operators import CoeffVector, apply_block

#: A term this small (relative to ``eps_rel * ||y|| * (1 - kappa)``) ends the sum.
EARLY_EXIT = 1e-3


@dataclass(frozen=True)
class NeumannPlan:
    kappa: float
    eps_rel: float
    J: int

    @classmethod
    def make(cls, kappa, eps_rel):
        return cls(kappa, eps_rel, terms_needed(kappa, eps_rel))

    def remainder_bound(self):
        """``kappa^(J+1) / (1 - kappa)``, the relative truncation error."""
        return self.kappa ** (self.J + 1) / (1.0 - self.kappa)


def _check_kappa(kappa):
    if not 0 <= kappa < 1:
        raise KappaOutOfRange(f"need 0 <= kappa < 1, got {kappa!r}")


def terms_needed(kappa, eps_rel):
    """Smallest ``J >= 0`` with ``kappa**(J+1) / (1 - kappa) <= eps_rel``."""
    _check_kappa(kappa)
    if not eps_rel > 0:
        raise ValueError("eps_rel must be positive")
    if kappa == 0:
        return 0
    J = max(0, math.ceil(math.log(eps_rel * (1 - kappa)) / math.log(kappa)) - 1)
    while kappa ** (J + 1) / (1 - kappa) > eps_rel:
        J += 1
    while J > 0 and kappa**J / (1 - kappa) <= eps_rel:
        J -= 1
    return J


def _colnorms(basis, X):
    return np.sqrt(np.maximum(np.einsum("ij,ij->j", X.conj(), basis.weights[:, None] * X).real, 0))


def neumann_block(K, kappa, Y, basis, eps_rel):
    """Sum ``K^j Y`` for ``j = 0..J`` on coefficient columns.

    Returns ``(Z, terms)`` where ``terms`` is the number of powers of ``K``
    actually applied.  Raises :class:`ResidualCheckFailed` when some column
    misses ``||(I - K) z - y|| <= 2 eps_rel ||y||``.
    """
    J = terms_needed(kappa, eps_rel)
    Y = np.asarray(Y, dtype=complex).reshape(basis.dim, -1)
    ynorm = _colnorms(basis, Y)
    floor = EARLY_EXIT * eps_rel * (1 - kappa) * ynorm
    Z = Y.copy()
    term = Y
    used = 0
    for _ in range(J):
        term = apply_block(K, term, basis)
        Z += term
        used += 1
        if np.all(_colnorms(basis, term) < floor):
            break
    resid = _colnorms(basis, Z - apply_block(K, Z, basis) - Y)
    bad = resid > 2 * eps_rel * ynorm
    if np.any(bad):
        j = int(np.argmax(bad))
        raise ResidualCheckFailed(
            f"Neumann residual {resid[j]:.3e} exceeds 2*eps*||y|| = {2 * eps_rel * ynorm[j]:.3e}"
        )
    return Z, used


def apply_inverse(K, kappa, y, eps_rel):
    """``z ~ (I - K)^-1 y`` with ``||z - (I - K)^-1 y|| <= eps_rel ||y|| / (1 - kappa)``."""
    Z, _ = neumann_block(K, kappa, y.coeffs, y.basis, eps_rel)
    return CoeffVector(y.basis, Z[:, 0])
