"""Model space, vectors and operator presentations.

The infinite-dimensional Hilbert space is modelled by a truncation chosen by
the caller:

* ``fourier(N)`` -- Fourier coefficients on the circle, indices ``-N..N``;
* ``grid(n)`` -- values at ``n`` Gauss-Legendre nodes on ``[0, 1]`` with the
  quadrature-weighted L2 inner product;
* ``euclidean(n)`` -- plain coordinates in C^n (dense matrix problems).

Operators are immutable.  Each presentation knows how to act on a block of
coefficient columns (``_matvec``); the public entry points are :func:`apply`,
:func:`pair`, :func:`dense` and :func:`norm_upper_bound`.
"""

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import scipy.linalg

from .errors import BasisMismatch, ResolutionMismatch, UnboundedSymbol

FOURIER = "fourier"
GRID = "grid"
EUCLIDEAN = "euclidean"

#: Largest Fourier index / node count the library will work with.
MAX_INDEX = 4096

_EPS = np.finfo(float).eps


@lru_cache(maxsize=32)
def gauss_legendre(n):
    """Gauss-Legendre nodes and weights mapped to ``[0, 1]`` (read-only)."""
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


@dataclass(frozen=True)
class Basis:
    kind: str
    resolution: int

    def __post_init__(self):
        if self.kind not in (FOURIER, GRID, EUCLIDEAN):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if int(self.resolution) != self.resolution:
            raise ValueError("resolution must be an integer")
        lowest = 0 if self.kind == FOURIER else 1
        if self.resolution < lowest:
            raise ValueError(f"resolution {self.resolution} too small for {self.kind}")

    @property
    def dim(self):
        if self.kind == FOURIER:
            return 2 * self.resolution + 1
        return self.resolution

    @cached_property
    def weights(self):
        if self.kind == GRID:
            return gauss_legendre(self.resolution)[1]
        w = np.ones(self.dim)
        w.setflags(write=False)
        return w

    @cached_property
    def nodes(self):
        """Sample points: quadrature nodes, Fourier indices or positions."""
        if self.kind == GRID:
            return gauss_legendre(self.resolution)[0]
        if self.kind == FOURIER:
            pts = np.arange(-self.resolution, self.resolution + 1)
        else:
            pts = np.arange(self.resolution)
        pts.setflags(write=False)
        return pts

    def position(self, index):
        """Array slot of a Fourier index (or plain position otherwise)."""
        if self.kind == FOURIER:
            if abs(index) > self.resolution:
                raise IndexError(f"Fourier index {index} outside |n| <= {self.resolution}")
            return index + self.resolution
        return index

    def doubled(self):
        if self.kind == EUCLIDEAN:
            return None
        return Basis(self.kind, 2 * self.resolution)

    def __repr__(self):
        return f"{self.kind}({self.resolution})"


def fourier(N):
    return Basis(FOURIER, N)


def grid(n):
    return Basis(GRID, n)


def euclidean(n):
    return Basis(EUCLIDEAN, n)


def _evaluate(fn, points):
    """Evaluate a user callable on an array of points, vectorised if possible."""
    points = np.asarray(points)
    try:
        out = np.asarray(fn(points), dtype=complex)
    except Exception:
        out = None
    if out is not None and out.shape == ():
        out = np.full(points.shape, complex(out))
    if out is None or out.shape != points.shape:
        out = np.array([complex(fn(p)) for p in points.tolist()], dtype=complex)
    return out


@dataclass(frozen=True, eq=False)
class CoeffVector:
    """A vector of the truncated model space."""

    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != (self.basis.dim,):
            raise ResolutionMismatch(
                f"{self.basis} needs {self.basis.dim} coefficients, got shape {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def resolution(self):
        return self.basis.resolution

    def norm(self):
        return float(np.sqrt(pair(self, self).real))

    def __getitem__(self, index):
        return self.coeffs[self.basis.position(index)]

    def _like(self, other):
        if not isinstance(other, CoeffVector):
            return NotImplemented
        _check_same_basis(self.basis, other.basis)
        return other.coeffs

    def __add__(self, other):
        c = self._like(other)
        if c is NotImplemented:
            return c
        return CoeffVector(self.basis, self.coeffs + c)

    def __sub__(self, other):
        c = self._like(other)
        if c is NotImplemented:
            return c
        return CoeffVector(self.basis, self.coeffs - c)

    def __mul__(self, scalar):
        if isinstance(scalar, CoeffVector):
            return NotImplemented
        return CoeffVector(self.basis, complex(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return CoeffVector(self.basis, self.coeffs / complex(scalar))

    def __neg__(self):
        return CoeffVector(self.basis, -self.coeffs)

    def __repr__(self):
        return f"CoeffVector({self.basis}, norm={self.norm():.6g})"

    @classmethod
    def zeros(cls, basis):
        return cls(basis, np.zeros(basis.dim, dtype=complex))

    @classmethod
    def unit(cls, basis, index):
        c = np.zeros(basis.dim, dtype=complex)
        c[basis.position(index)] = 1.0
        return cls(basis, c)

    @classmethod
    def from_function(cls, fn, basis):
        """Sample ``fn`` at grid nodes, Fourier indices or positions."""
        return cls(basis, _evaluate(fn, basis.nodes))


def _check_same_basis(a, b):
    if a.kind != b.kind:
        raise BasisMismatch(f"{a} vs {b}")
    if a != b:
        raise ResolutionMismatch(f"{a} vs {b}")


def pair(v, x):
    """Inner product <v, x>, conjugate-linear in ``v``.

    Real and imaginary parts are accumulated separately so that ``pair(x, x)``
    is bit-for-bit ``sum(w * (re**2 + im**2))``.
    """
    _check_same_basis(v.basis, x.basis)
    a, b = v.coeffs, x.coeffs
    w = v.basis.weights
    re = a.real * b.real + a.imag * b.imag
    im = a.real * b.imag - a.imag * b.real
    if v.basis.kind == GRID:
        re = w * re
        im = w * im
    return complex(np.sum(re), np.sum(im))


def _gram(basis, X, Y):
    """Block of inner products ``X^H W Y`` for coefficient columns."""
    w = basis.weights
    return X.conj().T @ (w[:, None] * Y)


# ---------------------------------------------------------------------------
# Operator presentations
# ---------------------------------------------------------------------------


class Operator:
    """Common behaviour of operator presentations."""

    # subclasses expose ``basis``: the fixed Basis, or None when any
    # resolution works

    @property
    def basis_kind(self):
        return self.basis.kind

    def _matvec(self, X, basis):
        raise NotImplementedError

    def _extend(self, X, coarse, fine):
        """Map coarse coefficients through the operator onto a finer basis."""
        raise NotImplementedError

    @property
    def refinable(self):
        return self.basis is None

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return Sum(self, other)

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        return Sum(self, Scaled(-1.0, other))

    def __mul__(self, c):
        if isinstance(c, Operator):
            return NotImplemented
        return Scaled(c, self)

    __rmul__ = __mul__

    def __neg__(self):
        return Scaled(-1.0, self)


def _check_operand(T, basis):
    if T.basis_kind != basis.kind:
        raise BasisMismatch(f"operator acts on {T.basis_kind}, vector lives in {basis}")
    if T.basis is not None and T.basis != basis:
        raise ResolutionMismatch(f"operator fixed at {T.basis}, vector at {basis}")


def apply(T, x):
    """Return ``T x`` as a new :class:`CoeffVector` in the same basis."""
    _check_operand(T, x.basis)
    return CoeffVector(x.basis, T._matvec(x.coeffs, x.basis))


def apply_block(T, X, basis):
    """Apply ``T`` to coefficient columns ``X`` (shape ``(dim, k)``)."""
    _check_operand(T, basis)
    return T._matvec(np.asarray(X, dtype=complex), basis)


def dense(T, basis):
    """Matrix of ``T`` in the coefficient coordinates of ``basis``."""
    return apply_block(T, np.eye(basis.dim, dtype=complex), basis)


def weighted_matrix(M, basis):
    """Unitarily equivalent l2 matrix ``W^1/2 M W^-1/2`` of a coordinate matrix."""
    if basis.kind != GRID:
        return np.asarray(M)
    r = np.sqrt(basis.weights)
    return r[:, None] * M / r[None, :]


@dataclass(frozen=True, eq=False)
class DiagonalMultiplier(Operator):
    """Fourier multiplier ``e_n -> symbol(n) e_n``.

    ``envelope`` is a nonincreasing function of ``|n|`` dominating ``|symbol|``;
    it certifies norms and projection tails.  When only ``constant`` is given the
    envelope ``constant * (1 + k)**order`` is used.
    """

    symbol: object
    order: float = 0.0
    constant: float = None
    envelope: object = None

    basis = None

    def __post_init__(self):
        if self.order > 0:
            raise ValueError("multiplier order must be <= 0")
        n = np.arange(-MAX_INDEX, MAX_INDEX + 1)
        values = np.abs(self.symbol_values(n))
        if not np.all(np.isfinite(values)):
            raise ValueError("symbol must be finite on |n| <= %d" % MAX_INDEX)
        slack = 1 + 1e-12
        if self.constant is not None:
            bound = self.constant * (1.0 + np.abs(n)) ** self.order
            if np.any(values > bound * slack + 1e-300):
                bad = n[np.argmax(values - bound * slack)]
                raise ValueError(f"|symbol({bad})| exceeds constant*(1+|n|)^order")
        if self.envelope is not None:
            k = np.arange(MAX_INDEX + 2)
            env = self.envelope_at(k)
            if np.any(np.diff(env) > 1e-15 * np.maximum(env[:-1], 1e-300)):
                raise ValueError("envelope must be nonincreasing in |n|")
            if np.any(values > env[np.abs(n)] * slack + 1e-300):
                raise ValueError("envelope does not dominate |symbol|")

    @property
    def basis_kind(self):
        return FOURIER

    @property
    def bounded(self):
        return self.envelope is not None or self.constant is not None

    def symbol_values(self, indices):
        return _evaluate(self.symbol, indices)

    def envelope_at(self, k):
        """Envelope evaluated at nonnegative ``k`` (array)."""
        k = np.asarray(k)
        if self.envelope is not None:
            return np.abs(_evaluate(self.envelope, k)).real
        if self.constant is not None:
            return self.constant * (1.0 + k) ** self.order
        raise UnboundedSymbol("multiplier has no declared envelope or constant")

    def _matvec(self, X, basis):
        sigma = self.symbol_values(basis.nodes)
        return sigma[:, None] * X if X.ndim == 2 else sigma * X

    def _extend(self, X, coarse, fine):
        out = np.zeros((fine.dim,) + X.shape[1:], dtype=complex)
        off = fine.resolution - coarse.resolution
        out[off:off + coarse.dim] = self._matvec(X, coarse)
        return out


@dataclass(frozen=True, eq=False)
class FiniteRankOperator(Operator):
    """``F x = sum_i u_i <v_i, x>`` with coefficient columns ``left``/``right``.

    On construction the left vectors are replaced by an orthonormal basis of
    their span (column-pivoted QR, drop threshold ``1e-12`` times the largest
    column norm) and the functionals are rewritten so that ``F`` is unchanged.
    """

    basis: Basis
    left: np.ndarray
    right: np.ndarray
    prune: bool = True
    declared_rank: int = field(init=False)

    def __post_init__(self):
        dim = self.basis.dim
        U = np.array(self.left, dtype=complex).reshape(dim, -1)
        V = np.array(self.right, dtype=complex).reshape(dim, -1)
        if U.shape != V.shape:
            raise ValueError("left vectors and functionals must pair up")
        if not (np.all(np.isfinite(U)) and np.all(np.isfinite(V))):
            raise ValueError("finite-rank factors must be finite")
        object.__setattr__(self, "declared_rank", U.shape[1])
        if self.prune:
            U, V = _orthonormalize(self.basis, U, V)
        U.setflags(write=False)
        V.setflags(write=False)
        object.__setattr__(self, "left", U)
        object.__setattr__(self, "right", V)

    @classmethod
    def from_vectors(cls, us, vs, prune=True):
        us, vs = list(us), list(vs)
        if not us:
            raise ValueError("need at least one vector to fix the basis; use zero()")
        basis = us[0].basis
        for vec in us + vs:
            _check_same_basis(basis, vec.basis)
        U = np.column_stack([u.coeffs for u in us])
        V = np.column_stack([v.coeffs for v in vs])
        return cls(basis, U, V, prune=prune)

    @classmethod
    def zero(cls, basis):
        empty = np.zeros((basis.dim, 0), dtype=complex)
        return cls(basis, empty, empty)

    @property
    def rank(self):
        return self.left.shape[1]

    @property
    def u(self):
        return [CoeffVector(self.basis, c) for c in self.left.T]

    @property
    def v(self):
        return [CoeffVector(self.basis, c) for c in self.right.T]

    def scaled(self, c):
        return FiniteRankOperator(self.basis, self.left, np.conj(c) * self.right, prune=False)

    @staticmethod
    def concat(parts, basis):
        parts = [p for p in parts if p.rank]
        if not parts:
            return FiniteRankOperator.zero(basis)
        U = np.hstack([p.left for p in parts])
        V = np.hstack([p.right for p in parts])
        return FiniteRankOperator(basis, U, V)

    def _matvec(self, X, basis):
        w = basis.weights
        if X.ndim == 1:
            return self.left @ (self.right.conj().T @ (w * X))
        return self.left @ (self.right.conj().T @ (w[:, None] * X))


def _orthonormalize(basis, U, V):
    if U.shape[1] == 0:
        return U.copy(), V.copy()
    r = np.sqrt(basis.weights)[:, None]
    Uw = r * U
    norms = np.linalg.norm(Uw, axis=0)
    if norms.max() == 0.0:
        empty = np.zeros((U.shape[0], 0), dtype=complex)
        return empty, empty.copy()
    Q, R, piv = scipy.linalg.qr(Uw, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    keep = int(np.sum(diag > 1e-12 * norms.max()))
    Q, R = Q[:, :keep], R[:keep, :]
    # F = U V^H W = (W^-1/2 Q) (R P^T) V^H W  =>  new functionals V P R^H
    Vp = V[:, piv] @ R.conj().T
    return Q / r, Vp


@dataclass(frozen=True, eq=False)
class SeparableKernel(Operator):
    """Degenerate kernel ``sum_i a_i(s) b_i(t)`` given by callables.

    On a grid the action is ``(Tx)(s) = sum_i a_i(s) int_0^1 b_i(t) x(t) dt``.
    With ``kind="fourier"`` the callables give Fourier coefficients and the
    action is ``sum_i a_i <b_i, x>``.
    """

    terms: tuple
    kind: str = GRID

    basis = None

    def __post_init__(self):
        terms = tuple((a, b) for a, b in self.terms)
        if self.kind not in (GRID, FOURIER):
            raise ValueError("separable kernels live on a grid or in Fourier space")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_cache", {})

    @property
    def basis_kind(self):
        return self.kind

    def factors(self, basis):
        """Coefficient columns (left vectors, functionals) at ``basis``."""
        hit = self._cache.get(basis)
        if hit is None:
            pts = basis.nodes
            if self.terms:
                U = np.column_stack([_evaluate(a, pts) for a, _ in self.terms])
                V = np.column_stack([_evaluate(b, pts) for _, b in self.terms])
            else:
                U = V = np.zeros((basis.dim, 0), dtype=complex)
            if self.kind == GRID:
                V = V.conj()
            U.setflags(write=False)
            V.setflags(write=False)
            hit = self._cache[basis] = (U, V)
        return hit

    def finite_rank(self, basis):
        _check_operand(self, basis)
        U, V = self.factors(basis)
        return FiniteRankOperator(basis, U, V)

    def _matvec(self, X, basis):
        U, V = self.factors(basis)
        return U @ _gram(basis, V, X.reshape(basis.dim, -1)).reshape((-1,) + X.shape[1:])

    def _extend(self, X, coarse, fine):
        _, V = self.factors(coarse)
        Uf, _ = self.factors(fine)
        return Uf @ _gram(coarse, V, X.reshape(coarse.dim, -1)).reshape((-1,) + X.shape[1:])


@dataclass(frozen=True, eq=False)
class SampledKernel(Operator):
    """Kernel samples ``k(s_i, t_j)`` on a Gauss-Legendre grid (Nystrom matrix)."""

    nodes: np.ndarray
    weights: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        n = nodes.size
        ref_nodes, ref_weights = gauss_legendre(n)
        if not (np.allclose(nodes, ref_nodes, atol=1e-13)
                and np.allclose(self.weights, ref_weights, atol=1e-13)):
            raise BasisMismatch("sampled kernels must use Gauss-Legendre nodes on [0, 1]")
        K = np.array(self.samples, dtype=complex)
        if K.shape != (n, n) or not np.all(np.isfinite(K)):
            raise ValueError("samples must be a finite n-by-n array")
        K.setflags(write=False)
        object.__setattr__(self, "nodes", ref_nodes)
        object.__setattr__(self, "weights", ref_weights)
        object.__setattr__(self, "samples", K)
        object.__setattr__(self, "basis", grid(n))

    @classmethod
    def from_function(cls, kernel, n):
        nodes, weights = gauss_legendre(n)
        S, T = np.meshgrid(nodes, nodes, indexing="ij")
        try:
            samples = np.broadcast_to(np.asarray(kernel(S, T), dtype=complex), (n, n))
        except Exception:
            samples = np.array([[complex(kernel(s, t)) for t in nodes] for s in nodes])
        return cls(nodes, weights, samples)

    def matrix(self):
        return self.samples * self.weights[None, :]

    def _matvec(self, X, basis):
        return self.matrix() @ X


@dataclass(frozen=True, eq=False)
class FiniteMatrix(Operator):
    """Dense matrix acting on coefficient coordinates."""

    matrix: np.ndarray
    basis: Basis = None

    def __post_init__(self):
        M = np.array(self.matrix, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("matrix must be square")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix entries must be finite")
        basis = self.basis if self.basis is not None else euclidean(M.shape[0])
        if basis.dim != M.shape[0]:
            raise ResolutionMismatch(f"{basis} has dimension {basis.dim}, matrix is {M.shape}")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "basis", basis)

    def _matvec(self, X, basis):
        return self.matrix @ X


@dataclass(frozen=True, eq=False)
class Sum(Operator):
    left: Operator
    right: Operator

    def __post_init__(self):
        a, b = self.left, self.right
        if a.basis_kind != b.basis_kind:
            raise BasisMismatch(f"cannot add {a.basis_kind} and {b.basis_kind} operators")
        if a.basis is not None and b.basis is not None and a.basis != b.basis:
            raise ResolutionMismatch(f"{a.basis} vs {b.basis}")

    @property
    def basis(self):
        return self.left.basis if self.left.basis is not None else self.right.basis

    @property
    def basis_kind(self):
        return self.left.basis_kind

    @property
    def refinable(self):
        return self.left.refinable and self.right.refinable

    def _matvec(self, X, basis):
        return self.left._matvec(X, basis) + self.right._matvec(X, basis)

    def _extend(self, X, coarse, fine):
        return self.left._extend(X, coarse, fine) + self.right._extend(X, coarse, fine)


@dataclass(frozen=True, eq=False)
class Scaled(Operator):
    factor: complex
    inner: Operator

    def __post_init__(self):
        object.__setattr__(self, "factor", complex(self.factor))

    @property
    def basis(self):
        return self.inner.basis

    @property
    def basis_kind(self):
        return self.inner.basis_kind

    @property
    def refinable(self):
        return self.inner.refinable

    def _matvec(self, X, basis):
        if self.factor == 0:
            return np.zeros_like(X, dtype=complex)
        return self.factor * self.inner._matvec(X, basis)

    def _extend(self, X, coarse, fine):
        if self.factor == 0:
            return np.zeros((fine.dim,) + X.shape[1:], dtype=complex)
        return self.factor * self.inner._extend(X, coarse, fine)


def extend(T, x, fine):
    """``T x`` evaluated on a finer basis (Nystrom-style interpolation).

    Returns ``None`` when the presentation is fixed to one resolution.
    """
    if not T.refinable or fine is None:
        return None
    _check_operand(T, x.basis)
    return CoeffVector(fine, T._extend(x.coeffs, x.basis, fine))


#: Safety factor on dense spectral-norm estimates.
MATRIX_SAFETY = 1.01


def _hilbert_schmidt(basis, U, V):
    r = np.sqrt(basis.weights)[:, None]
    GU = (r * U).conj().T @ (r * U)
    GV = (r * V).conj().T @ (r * V)
    return float(np.sqrt(max(np.sum(GU * GV.T).real, 0.0)))


def norm_upper_bound(T, basis=None):
    """Upper bound on the operator norm of ``T``.

    Multipliers use the envelope supremum; kernels use the Hilbert-Schmidt norm
    (quadrature-weighted Frobenius norm); dense matrices use the spectral norm
    times a 1.01 safety factor; sums and scalings use the triangle inequality.
    ``basis`` picks the discretisation for resolution-free kernels.
    """
    if isinstance(T, DiagonalMultiplier):
        return float(T.envelope_at(np.array([0]))[0])
    if isinstance(T, Sum):
        return norm_upper_bound(T.left, basis) + norm_upper_bound(T.right, basis)
    if isinstance(T, Scaled):
        return abs(T.factor) * norm_upper_bound(T.inner, basis)
    if isinstance(T, SeparableKernel):
        if basis is None or basis.kind != T.kind:
            basis = grid(128) if T.kind == GRID else fourier(MAX_INDEX)
        U, V = T.factors(basis)
        return _hilbert_schmidt(basis, U, V)
    if isinstance(T, SampledKernel):
        w = T.weights
        return float(np.sqrt(np.sum(np.outer(w, w) * np.abs(T.samples) ** 2)))
    if isinstance(T, FiniteMatrix):
        A = weighted_matrix(T.matrix, T.basis)
        return MATRIX_SAFETY * float(np.linalg.norm(A, 2)) if A.size else 0.0
    if isinstance(T, FiniteRankOperator):
        if T.rank == 0:
            return 0.0
        r = np.sqrt(T.basis.weights)[:, None]
        Ru = np.linalg.qr(r * T.left, mode="r")
        Rv = np.linalg.qr(r * T.right, mode="r")
        return MATRIX_SAFETY * float(np.linalg.norm(Ru @ Rv.conj().T, 2))
    raise TypeError(f"no norm bound for {type(T).__name__}")
