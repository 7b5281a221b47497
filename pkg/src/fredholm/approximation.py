"""Certified splittings ``T = F + K`` with ``F`` finite rank and ``||K|| <= kappa < 1``.

Two routes produce ``F``: projecting a Fourier multiplier onto ``|n| <= N``
(tail certified by the declared symbol envelope) and truncating the SVD of a
dense discretisation (tail = Hilbert-Schmidt norm of the discarded singular
values).  Presentations that already are finite rank split with ``K = 0``.
"""

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NoSplitFound, TargetUnreachable
from .operators import (
    FOURIER,
    MAX_INDEX,
    DiagonalMultiplier,
    FiniteMatrix,
    FiniteRankOperator,
    SampledKernel,
    Scaled,
    SeparableKernel,
    Sum,
    apply_block,
    dense,
    fourier,
    weighted_matrix,
)

DEFAULT_THETA = 0.5
MAX_FOURIER_INDEX = MAX_INDEX
DEFAULT_MAX_RANK = 512

ALREADY_FINITE_RANK = "already_finite_rank"
FOURIER_PROJECTION = "fourier_projection"
TRUNCATED_SVD = "truncated_svd"


def max_rank():
    """Rank budget for truncated SVDs; ``FREDHOLM_MAX_RANK`` overrides it."""
    value = os.environ.get("FREDHOLM_MAX_RANK")
    return int(value) if value else DEFAULT_MAX_RANK


@dataclass(frozen=True, eq=False)
class Splitting:
    """``T = F + K`` with the certificate ``||K|| <= kappa <= theta < 1``.

    ``method`` is one of ``already_finite_rank``, ``fourier_projection``,
    ``truncated_svd`` (joined with ``+`` when a sum needed both routes);
    ``order`` holds the projection index ``N`` and/or SVD rank ``r``.
    """

    T: object
    F: FiniteRankOperator
    K: object
    kappa: float
    theta: float
    method: str
    order: dict

    @property
    def basis(self):
        return self.F.basis


# ---------------------------------------------------------------------------
# presentation bookkeeping
# ---------------------------------------------------------------------------


def _flatten(T, coef=1.0):
    """Expand Sum/Scaled trees into ``[(coefficient, leaf), ...]``."""
    if isinstance(T, Sum):
        return _flatten(T.left, coef) + _flatten(T.right, coef)
    if isinstance(T, Scaled):
        return _flatten(T.inner, coef * T.factor)
    return [(complex(coef), T)]


def _is_finite_rank(leaf):
    return isinstance(leaf, (FiniteRankOperator, SeparableKernel))


class _CombinedSymbol:
    """Linear combination of multipliers, with summed envelopes."""

    def __init__(self, terms):
        self.terms = terms

    def values(self, n):
        out = np.zeros(np.shape(n), dtype=complex)
        for c, m in self.terms:
            out += c * m.symbol_values(n)
        return out

    def envelope(self, k):
        out = np.zeros(np.shape(k))
        for c, m in self.terms:
            out += abs(c) * m.envelope_at(k)
        return out


def _multiplier_terms(T):
    terms = _flatten(T)
    for _, leaf in terms:
        if not isinstance(leaf, DiagonalMultiplier):
            raise TypeError(
                f"Fourier projection needs multipliers, got {type(leaf).__name__}"
            )
    return terms


def fourier_tail(T, N):
    """Certified bound on ``||T - P_N T||`` from the declared envelopes."""
    sym = _CombinedSymbol(_multiplier_terms(T))
    return float(sym.envelope(np.array([N + 1]))[0])


def _project(sym, N, basis):
    n_max = min(N, basis.resolution)
    idx = np.arange(-n_max, n_max + 1)
    sigma = sym.values(idx)
    pos = idx + basis.resolution
    U = np.zeros((basis.dim, idx.size), dtype=complex)
    V = np.zeros((basis.dim, idx.size), dtype=complex)
    U[pos, np.arange(idx.size)] = sigma
    V[pos, np.arange(idx.size)] = 1.0
    return FiniteRankOperator(basis, U, V)


def fourier_project(T, N, basis=None):
    """Project a Fourier multiplier onto the modes ``|n| <= N``.

    Returns ``(F, tail)`` with ``F = P_N T`` represented at ``basis``
    (default ``fourier(N)``) and ``tail >= ||T - P_N T||`` read off the
    envelope at ``|n| = N + 1``.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    basis = basis if basis is not None else fourier(N)
    if basis.kind != FOURIER:
        raise ValueError("Fourier projection needs a Fourier basis")
    sym = _CombinedSymbol(_multiplier_terms(T))
    tail = float(sym.envelope(np.array([N + 1]))[0])
    return _project(sym, N, basis), tail


def minimal_projection_index(T, theta):
    """Smallest ``N`` whose certified tail is ``<= theta`` (``None`` if over budget)."""
    sym = _CombinedSymbol(_multiplier_terms(T))
    tails = sym.envelope(np.arange(1, MAX_FOURIER_INDEX + 2))
    hits = np.nonzero(tails <= theta)[0]
    return int(hits[0]) if hits.size else None


def svd_truncate(T, theta, basis=None):
    """Keep the fewest singular triples whose discarded HS tail is ``<= theta``.

    The tail includes a rounding allowance ``8 n eps ||T||_HS`` so that it also
    bounds the remainder as actually computed.  Returns ``(F, tail)``.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    basis = basis if basis is not None else T.basis
    if basis is None:
        raise ValueError("a basis is needed to discretise this operator")
    M = dense(T, basis)
    A = weighted_matrix(M, basis)
    U, s, Vh = np.linalg.svd(A)
    slack = 8 * basis.dim * np.finfo(float).eps * float(np.sqrt(np.sum(s**2)))
    # tails[r] = HS norm of s[r:]
    tails = np.sqrt(np.append(np.cumsum((s**2)[::-1])[::-1], 0.0)) + slack
    r = int(np.nonzero(tails <= theta)[0][0]) if np.any(tails <= theta) else None
    budget = max_rank()
    if r is None or r > budget:
        raise TargetUnreachable(
            f"rank needed for theta={theta:g} exceeds the budget of {budget}"
        )
    root = np.sqrt(basis.weights)[:, None]
    left = U[:, :r] * s[:r] / root
    right = Vh[:r].conj().T / root
    return FiniteRankOperator(basis, left, right), float(tails[r])


def split(T, theta=DEFAULT_THETA, basis=None):
    """Certified splitting of ``T`` with ``kappa <= theta``.

    Finite-rank parts go straight into ``F``; multipliers are projected at the
    smallest admissible ``N``; dense parts are SVD-truncated.  When a sum mixes
    multipliers and dense parts each gets half of ``theta``.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if basis is None:
        basis = T.basis
        if basis is None:
            raise ValueError("resolution-free operators need an explicit basis")
    terms = _flatten(T)
    finite = [(c, leaf) for c, leaf in terms if _is_finite_rank(leaf)]
    spectral = [(c, leaf) for c, leaf in terms if isinstance(leaf, DiagonalMultiplier)]
    dense_parts = [
        (c, leaf) for c, leaf in terms if isinstance(leaf, (SampledKernel, FiniteMatrix))
    ]
    share = theta / max(1, bool(spectral) + bool(dense_parts))

    parts, kappa, methods, order = [], 0.0, [], {}
    for c, leaf in finite:
        F_leaf = leaf if isinstance(leaf, FiniteRankOperator) else leaf.finite_rank(basis)
        if F_leaf.basis != basis:
            raise NoSplitFound(f"finite-rank part fixed at {F_leaf.basis}, problem at {basis}")
        parts.append(F_leaf.scaled(c))
    if spectral:
        sym_op = _as_operator(spectral)
        N = minimal_projection_index(sym_op, share)
        if N is None:
            raise NoSplitFound(
                f"no projection index <= {MAX_FOURIER_INDEX} reaches theta={share:g}"
            )
        F_m, tail = fourier_project(sym_op, N, basis)
        parts.append(F_m)
        kappa += tail
        methods.append(FOURIER_PROJECTION)
        order["N"] = N
    if dense_parts:
        M = sum(c * dense(leaf, basis) for c, leaf in dense_parts)
        try:
            F_d, tail = svd_truncate(FiniteMatrix(M, basis), share, basis)
        except TargetUnreachable as exc:
            raise NoSplitFound(str(exc)) from exc
        parts.append(F_d)
        kappa += tail
        methods.append(TRUNCATED_SVD)
        order["r"] = F_d.rank
    F = FiniteRankOperator.concat(parts, basis)
    if kappa > theta:
        raise NoSplitFound(f"combined tail {kappa:g} exceeds theta={theta:g}")
    K = Scaled(0.0, T) if kappa == 0.0 else Sum(T, Scaled(-1.0, F))
    method = "+".join(methods) if methods else ALREADY_FINITE_RANK
    return Splitting(T=T, F=F, K=K, kappa=kappa, theta=theta, method=method, order=order)


def _as_operator(terms):
    op = None
    for c, leaf in terms:
        part = leaf if c == 1 else Scaled(c, leaf)
        op = part if op is None else Sum(op, part)
    return op


# ---------------------------------------------------------------------------
# empirical check of norm convergence of P_N T
# ---------------------------------------------------------------------------


class ProbeRow(NamedTuple):
    N: int
    measured_tail: float
    certified_tail: float


def bap_convergence_probe(T, N_list, basis=None, n_random=16, seed=0):
    """Measure ``||(I - P_N) T x||`` over probe unit vectors for each ``N``.

    Probes are every standard basis vector, ``n_random`` seeded random unit
    vectors and the top right singular vector of the discarded block, all at
    ``basis`` (default: ``fourier(4 * max(N_list))``, capped at the index
    budget).  Each row pairs the measurement with the envelope certificate.
    """
    N_list = [int(N) for N in N_list]
    if basis is None:
        basis = fourier(min(MAX_FOURIER_INDEX, max(4 * max(N_list), 8)))
    rng = np.random.default_rng(seed)
    probes = rng.standard_normal((basis.dim, n_random)) + 1j * rng.standard_normal(
        (basis.dim, n_random)
    )
    probes /= np.linalg.norm(probes, axis=0)
    TM = dense(T, basis)
    TP = apply_block(T, probes, basis)
    rows = []
    for N in N_list:
        high = np.abs(basis.nodes) > N
        block = TM[high]
        if block.size:
            # the top right singular vector is the worst-case probe
            top = float(np.linalg.svd(block, compute_uv=False)[0])
            measured = max(
                top,
                float(np.max(np.linalg.norm(block, axis=0))),
                float(np.max(np.linalg.norm(TP[high], axis=0))),
            )
        else:
            measured = 0.0
        rows.append(ProbeRow(N, measured, fourier_tail(T, N)))
    return rows


def observed_orders(rows):
    """Log-log slopes of the certified tail between consecutive ``N``."""
    out = []
    for a, b in zip(rows, rows[1:]):
        if a.certified_tail > 0 and b.certified_tail > 0:
            out.append(np.log(b.certified_tail / a.certified_tail) / np.log(b.N / a.N))
        else:
            out.append(float("-inf"))
    return out
