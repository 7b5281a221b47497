"""Rank-arithmetic checks on finite matrices and a dense reference solver.

These are oracles: they share no code path with the reduction in
:mod:`fredholm.solver` beyond building the matrix of ``T``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EquivalenceViolated, RNotInvertible
from .operators import CoeffVector, dense, weighted_matrix

#: Singular values below RANK_TOL * scale count as zero (scale: sigma_max
#: unless the caller knows a better one).
RANK_TOL = 1e-10
#: Largest condition number accepted for an "invertible" R.
COND_LIMIT = 1e12


def numerical_rank(M, tol=RANK_TOL, scale=None):
    """Count singular values above ``tol * scale`` (default scale: ``sigma_max``)."""
    M = np.asarray(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    scale = s[0] if scale is None else scale
    if scale == 0:
        return 0
    return int(np.sum(s > tol * scale))


def _square(S):
    S = np.asarray(S, dtype=complex)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(S)):
        raise ValueError("matrix entries must be finite")
    return S


def restrict_to_range(S):
    """Orthonormal basis ``Q`` of ``ran S`` and the matrix of ``(I - S)|_M``.

    Returns ``(Q, Q^H (I - S) Q)``; both are empty when ``S = 0``.
    """
    S = _square(S)
    n = S.shape[0]
    U, s, _ = np.linalg.svd(S)
    k = int(np.sum(s > RANK_TOL * s[0])) if n and s[0] > 0 else 0
    Q = U[:, :k]
    return Q, Q.conj().T @ (np.eye(n) - S) @ Q


@dataclass(frozen=True)
class LemmaReport:
    inj_V: bool
    inj_M: bool
    surj_V: bool
    surj_M: bool
    rank_S: int
    rank_I_minus_S: int
    rank_restricted: int
    dim_M: int


def lemma_equivalences(S):
    """Injectivity and surjectivity of ``I - S`` on the space and on ``ran S``.

    Injective means full column rank, surjective full row rank.  Raises
    :class:`EquivalenceViolated` if the two levels disagree.
    """
    S = _square(S)
    n = S.shape[0]
    Q, restricted = restrict_to_range(S)
    m = Q.shape[1]
    full = np.eye(n) - S
    # the restriction is a compression of I - S: judge both on its scale
    scale = np.linalg.norm(full, 2) if n else 0.0
    rank_full = numerical_rank(full, scale=scale)
    rank_res = numerical_rank(restricted, scale=scale)
    report = LemmaReport(
        inj_V=rank_full == n,
        inj_M=rank_res == m,
        surj_V=rank_full == n,
        surj_M=rank_res == m,
        rank_S=m,
        rank_I_minus_S=rank_full,
        rank_restricted=rank_res,
        dim_M=m,
    )
    if report.inj_V != report.inj_M or report.surj_V != report.surj_M:
        raise EquivalenceViolated(f"restriction disagrees with the full operator: {report}")
    return report


@dataclass(frozen=True)
class CorollaryReport:
    injective: bool
    surjective: bool
    rank_R_minus_F: int
    rank_I_minus_S: int
    identity_error: float


def corollary_check(R, F):
    """For invertible ``R`` and finite-rank ``F``: ``R - F`` injective iff surjective.

    Also compares ``rank(R - F)`` with ``rank(I - S)``, ``S = F R^-1``, and
    reports the relative error of ``R - F = (I - S) R``.
    """
    R = _square(R)
    F = _square(F)
    if R.shape != F.shape:
        raise ValueError("R and F must have the same shape")
    n = R.shape[0]
    if n and np.linalg.cond(R) >= COND_LIMIT:
        raise RNotInvertible(f"cond(R) = {np.linalg.cond(R):.3e}")
    D = R - F
    S = np.linalg.solve(R.T, F.T).T
    # cancellation in R - F and I - S is measured against the operands
    rank_D = numerical_rank(D, scale=max(np.linalg.norm(R, 2), np.linalg.norm(F, 2)))
    rank_IS = numerical_rank(np.eye(n) - S, scale=max(1.0, np.linalg.norm(S, 2)))
    scale = max(np.linalg.norm(R), 1e-300)
    err = float(np.linalg.norm(D - (np.eye(n) - S) @ R) / scale)
    report = CorollaryReport(rank_D == n, rank_D == n, rank_D, rank_IS, err)
    if report.injective != report.surjective or rank_D != rank_IS:
        raise EquivalenceViolated(f"rank bookkeeping failed: {report}")
    return report


@dataclass(frozen=True)
class SingularSystem:
    null_vector: CoeffVector
    sigma_min: float


def dense_oracle_solve(T, y):
    """Direct solve of the full ``(I - T)`` matrix at ``y``'s resolution.

    Returns the solution, or :class:`SingularSystem` with a unit null vector
    when ``sigma_min < 1e-10 * ||I - T||``.
    """
    basis = y.basis
    M = np.eye(basis.dim) - dense(T, basis)
    A = weighted_matrix(M, basis)
    _, s, Vh = np.linalg.svd(A)
    if s[-1] < RANK_TOL * s[0]:
        null = Vh[-1].conj() / np.sqrt(basis.weights)
        v = CoeffVector(basis, null)
        return SingularSystem(v / v.norm(), float(s[-1]))
    return CoeffVector(basis, np.linalg.solve(M, y.coeffs))


# ---------------------------------------------------------------------------
# random test matrices
# ---------------------------------------------------------------------------


def random_integer_matrix(rng, n):
    """Entries in ``{-2..2}``, biased towards structure (rank loss, eigenvalue 1)."""
    style = rng.integers(3)
    if style == 0:
        S = rng.integers(-2, 3, size=(n, n))
    elif style == 1:
        S = rng.integers(-2, 3, size=(n, n)) * (rng.random((n, n)) < 0.3)
    else:
        S = np.triu(rng.integers(-2, 3, size=(n, n)), 1)
        S += np.diag(rng.integers(0, 3, size=n))
        perm = rng.permutation(n)
        S = S[np.ix_(perm, perm)]
    return S.astype(float)


def random_continuous_matrix(rng, n):
    """Gaussian, low-rank, or with a planted eigenvalue 1."""
    style = rng.integers(3)
    if style == 0:
        return rng.standard_normal((n, n))
    k = int(rng.integers(1, n + 1))
    X = rng.standard_normal((n, k))
    Y = rng.standard_normal((k, n))
    if style == 1:
        return X @ Y
    # S x = x for a chosen x: add a rank-one correction to a low-rank S
    S = X @ Y / n
    x = rng.standard_normal(n)
    z = rng.standard_normal(n)
    return S + np.outer(x - S @ x, z) / (z @ x)


def random_corollary_pair(rng, n, max_rank=3):
    R = np.eye(n) + 0.1 * rng.standard_normal((n, n))
    k = int(rng.integers(0, max_rank + 1))
    if k and rng.random() < 0.5:
        # plant a kernel vector: (R - F) x = 0
        x = rng.standard_normal(n)
        w = rng.standard_normal(n)
        F = np.outer(R @ x, w) / (w @ x)
        if k > 1:
            F = F + rng.standard_normal((n, k - 1)) @ rng.standard_normal((k - 1, n)) @ (
                np.eye(n) - np.outer(x, w) / (w @ x)
            )
    else:
        F = rng.standard_normal((n, k)) @ rng.standard_normal((k, n))
    return R, F


@dataclass(frozen=True)
class SuiteSummary:
    cases: int
    lemma_failures: int
    singular_cases: int
    corollary_cases: int
    corollary_failures: int
    corollary_singular: int


def lemma_suite(cases=1000, seed=0, max_n=8):
    """Run ``cases`` integer + ``cases`` continuous lemma checks and the
    corollary check on ``cases // 2`` random pairs."""
    rng = np.random.default_rng(seed)
    failures = singular = 0
    for gen in (random_integer_matrix, random_continuous_matrix):
        for _ in range(cases):
            S = gen(rng, int(rng.integers(1, max_n + 1)))
            try:
                rep = lemma_equivalences(S)
            except EquivalenceViolated:
                failures += 1
                continue
            singular += not rep.inj_V
    cor_cases = max(cases // 2, 1)
    cor_fail = cor_singular = 0
    for _ in range(cor_cases):
        R, F = random_corollary_pair(rng, int(rng.integers(1, max_n + 1)))
        try:
            rep = corollary_check(R, F)
        except EquivalenceViolated:
            cor_fail += 1
            continue
        cor_singular += not rep.injective
    return SuiteSummary(2 * cases, failures, singular, cor_cases, cor_fail, cor_singular)
