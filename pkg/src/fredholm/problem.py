"""Problem files (JSON) in, reports (JSON) out.

A problem names an operator, a right-hand side and solver settings::

    {"operator": {"kind": "separable_kernel", "terms": [{"a": "s", "b": "t"}]},
     "rhs": {"kind": "poly", "coeffs": [0, 1]},
     "theta": 0.5, "tol": 1e-8, "resolution": 64}

Operator kinds: ``separable_kernel``, ``sampled_kernel``, ``matrix``,
``multiplier``, ``circle``, ``sum``, ``scaled``.  Right-hand side kinds:
``poly``, ``function``, ``fourier``, ``power_decay``, ``geometric``,
``explicit``.  See README.md for every field.

``parse_problem`` normalises the description (all defaults written out), so
``parse_problem(serialize(spec)) == spec``.
"""

import json
import math
import re
import time
from dataclasses import dataclass

import numpy as np

from .approximation import DEFAULT_THETA, bap_convergence_probe, observed_orders, split
from .circle import (
    CircleOperator,
    bootstrap_check,
    decay_exponent,
    solve_smooth,
)
from .errors import FredholmError, ParseError, ValidationError
from .expressions import ExpressionError, compile_expression
from .operators import (
    EUCLIDEAN,
    FOURIER,
    GRID,
    MAX_INDEX,
    Basis,
    CoeffVector,
    DiagonalMultiplier,
    FiniteMatrix,
    SampledKernel,
    Scaled,
    SeparableKernel,
    Sum,
)
from .solver import DEFAULT_TOL, Solution, certify, solve

DEFAULT_RESOLUTION = {FOURIER: 256, GRID: 64}
ECHO_LIMIT = 4097

_TOP_KEYS = ("operator", "rhs", "theta", "tol", "resolution")


@dataclass(frozen=True)
class ProblemSpec:
    operator: dict
    rhs: dict = None
    theta: float = DEFAULT_THETA
    tol: float = DEFAULT_TOL
    resolution: int = None

    def to_dict(self):
        return {
            "operator": self.operator,
            "rhs": self.rhs,
            "theta": self.theta,
            "tol": self.tol,
            "resolution": self.resolution,
        }

    @property
    def basis_kind(self):
        return operator_basis_kind(self.operator)

    @property
    def basis(self):
        return Basis(self.basis_kind, self.resolution)


def serialize(spec):
    return json.dumps(spec.to_dict(), indent=2)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


class _Ctx:
    """Source text, for mapping field names to line numbers."""

    def __init__(self, text):
        self.text = text

    def line(self, path):
        key = re.split(r"[.\[]", path)[-1].rstrip("]")
        m = re.search(r'"%s"\s*:' % re.escape(key), self.text)
        return self.text.count("\n", 0, m.start()) + 1 if m else 1

    def fail(self, path, message=None):
        raise ParseError(path, self.line(path), message and f"{path}: {message}")


def _require(ctx, obj, key, path):
    if not isinstance(obj, dict):
        ctx.fail(path, "expected an object")
    if key not in obj:
        # a missing key has no line of its own; point at the enclosing object
        raise ParseError(f"{path}.{key}" if path else key, ctx.line(path) if path else 1)
    return obj[key]


def _only(ctx, obj, keys, path):
    for k in obj:
        if k not in keys:
            ctx.fail(f"{path}.{k}" if path else k, "unknown field")


def _real(ctx, value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        ctx.fail(path, "expected a number")
    if not math.isfinite(value):
        ctx.fail(path, "expected a finite number")
    return float(value)


def _scalar(ctx, value, path):
    """Real number or ``[re, im]``; normalised to float or two-element list."""
    if isinstance(value, list):
        if len(value) != 2:
            ctx.fail(path, "complex numbers are written [re, im]")
        re_, im_ = (_real(ctx, v, f"{path}[{i}]") for i, v in enumerate(value))
        return [re_, im_] if im_ else re_
    return _real(ctx, value, path)


def _as_complex(value):
    return complex(value[0], value[1]) if isinstance(value, list) else complex(value)


def _int(ctx, value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        ctx.fail(path, "expected an integer")
    return int(value)


def _expr(ctx, value, path, names):
    if isinstance(value, dict):
        _only(ctx, value, ("poly",), path)
        coeffs = _require(ctx, value, "poly", path)
        if not isinstance(coeffs, list) or not coeffs:
            ctx.fail(path, "poly needs a nonempty coefficient list")
        return {"poly": [_scalar(ctx, c, f"{path}.poly[{i}]") for i, c in enumerate(coeffs)]}
    if not isinstance(value, str):
        ctx.fail(path, "expected an expression string or {\"poly\": [...]}")
    try:
        compile_expression(value, names)
    except ExpressionError as exc:
        ctx.fail(path, str(exc))
    return value


def _symbol(ctx, d, path):
    if not isinstance(d, dict):
        ctx.fail(path, "expected an object")
    family = _require(ctx, d, "family", path)
    if family == "geometric":
        _only(ctx, d, ("family", "ratio", "scale"), path)
        q = _real(ctx, _require(ctx, d, "ratio", path), f"{path}.ratio")
        if not 0 < q < 1:
            raise ValidationError(f"{path}.ratio", "must lie in (0, 1)")
        return {"family": family, "ratio": q, "scale": _scalar(ctx, d.get("scale", 1.0), f"{path}.scale")}
    if family == "power":
        _only(ctx, d, ("family", "constant", "exponent"), path)
        p = _real(ctx, _require(ctx, d, "exponent", path), f"{path}.exponent")
        if p <= 0:
            raise ValidationError(f"{path}.exponent", "must be positive")
        return {
            "family": family,
            "constant": _real(ctx, _require(ctx, d, "constant", path), f"{path}.constant"),
            "exponent": p,
        }
    if family == "inverse_quadratic":
        _only(ctx, d, ("family", "shift", "scale"), path)
        a = _real(ctx, _require(ctx, d, "shift", path), f"{path}.shift")
        if a <= 0:
            raise ValidationError(f"{path}.shift", "must be positive")
        return {"family": family, "shift": a, "scale": _scalar(ctx, d.get("scale", 1.0), f"{path}.scale")}
    if family == "explicit":
        _only(ctx, d, ("family", "values"), path)
        vals = _require(ctx, d, "values", path)
        return {"family": family, "values": _index_map(ctx, vals, f"{path}.values")}
    ctx.fail(f"{path}.family", f"unknown symbol family {family!r}")


def _index_map(ctx, vals, path):
    if not isinstance(vals, dict):
        ctx.fail(path, "expected an object mapping index -> value")
    out = {}
    for k, v in vals.items():
        try:
            n = int(k)
        except ValueError:
            ctx.fail(path, f"index {k!r} is not an integer")
        if abs(n) > MAX_INDEX:
            raise ValidationError(path, f"index {n} beyond |n| <= {MAX_INDEX}")
        out[str(n)] = _scalar(ctx, v, f"{path}[{k}]")
    return dict(sorted(out.items(), key=lambda kv: int(kv[0])))


_FOURIER_VECTORS = ("fourier", "power_decay", "geometric")
_GRID_VECTORS = ("poly", "function")


def _vector(ctx, d, path):
    if not isinstance(d, dict):
        ctx.fail(path, "expected an object")
    kind = _require(ctx, d, "kind", path)
    if kind == "poly":
        _only(ctx, d, ("kind", "coeffs"), path)
        coeffs = _require(ctx, d, "coeffs", path)
        if not isinstance(coeffs, list) or not coeffs:
            ctx.fail(f"{path}.coeffs", "expected a nonempty list")
        return {"kind": kind, "coeffs": [_scalar(ctx, c, f"{path}.coeffs[{i}]") for i, c in enumerate(coeffs)]}
    if kind == "function":
        _only(ctx, d, ("kind", "expr"), path)
        return {"kind": kind, "expr": _expr(ctx, _require(ctx, d, "expr", path), f"{path}.expr", ("s",))}
    if kind == "fourier":
        _only(ctx, d, ("kind", "coeffs"), path)
        return {"kind": kind, "coeffs": _index_map(ctx, _require(ctx, d, "coeffs", path), f"{path}.coeffs")}
    if kind == "power_decay":
        _only(ctx, d, ("kind", "exponent", "scale"), path)
        p = _real(ctx, _require(ctx, d, "exponent", path), f"{path}.exponent")
        if p <= 0:
            raise ValidationError(f"{path}.exponent", "must be positive")
        return {"kind": kind, "exponent": p, "scale": _scalar(ctx, d.get("scale", 1.0), f"{path}.scale")}
    if kind == "geometric":
        _only(ctx, d, ("kind", "ratio", "scale"), path)
        q = _real(ctx, _require(ctx, d, "ratio", path), f"{path}.ratio")
        if not 0 < q < 1:
            raise ValidationError(f"{path}.ratio", "must lie in (0, 1)")
        return {"kind": kind, "ratio": q, "scale": _scalar(ctx, d.get("scale", 1.0), f"{path}.scale")}
    if kind == "explicit":
        _only(ctx, d, ("kind", "values"), path)
        vals = _require(ctx, d, "values", path)
        if not isinstance(vals, list) or not vals:
            ctx.fail(f"{path}.values", "expected a nonempty list")
        return {"kind": kind, "values": [_scalar(ctx, v, f"{path}.values[{i}]") for i, v in enumerate(vals)]}
    ctx.fail(f"{path}.kind", f"unknown vector kind {kind!r}")


def _operator(ctx, d, path):
    if not isinstance(d, dict):
        ctx.fail(path, "expected an object")
    kind = _require(ctx, d, "kind", path)
    if kind == "separable_kernel":
        _only(ctx, d, ("kind", "terms"), path)
        terms = _require(ctx, d, "terms", path)
        if not isinstance(terms, list) or not terms:
            ctx.fail(f"{path}.terms", "expected a nonempty list")
        out = []
        for i, t in enumerate(terms):
            tp = f"{path}.terms[{i}]"
            if not isinstance(t, dict):
                ctx.fail(tp, "expected an object")
            _only(ctx, t, ("a", "b", "scale"), tp)
            out.append({
                "a": _expr(ctx, _require(ctx, t, "a", tp), f"{tp}.a", ("s", "t", "x")),
                "b": _expr(ctx, _require(ctx, t, "b", tp), f"{tp}.b", ("s", "t", "x")),
                "scale": _scalar(ctx, t.get("scale", 1.0), f"{tp}.scale"),
            })
        return {"kind": kind, "terms": out}
    if kind == "sampled_kernel":
        _only(ctx, d, ("kind", "kernel"), path)
        k = _require(ctx, d, "kernel", path)
        if not isinstance(k, str):
            ctx.fail(f"{path}.kernel", "expected an expression in s and t")
        return {"kind": kind, "kernel": _expr(ctx, k, f"{path}.kernel", ("s", "t"))}
    if kind == "matrix":
        _only(ctx, d, ("kind", "entries"), path)
        rows = _require(ctx, d, "entries", path)
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            ctx.fail(f"{path}.entries", "expected a list of rows")
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ValidationError(f"{path}.entries", "matrix must be square")
        return {
            "kind": kind,
            "entries": [
                [_scalar(ctx, v, f"{path}.entries[{i}][{j}]") for j, v in enumerate(r)]
                for i, r in enumerate(rows)
            ],
        }
    if kind == "multiplier":
        _only(ctx, d, ("kind", "symbol"), path)
        return {"kind": kind, "symbol": _symbol(ctx, _require(ctx, d, "symbol", path), f"{path}.symbol")}
    if kind == "circle":
        _only(ctx, d, ("kind", "symbol", "smoothing"), path)
        sym = _symbol(ctx, _require(ctx, d, "symbol", path), f"{path}.symbol")
        smoothing = d.get("smoothing", [])
        if not isinstance(smoothing, list):
            ctx.fail(f"{path}.smoothing", "expected a list of {u, v} pairs")
        pairs = []
        for i, t in enumerate(smoothing):
            tp = f"{path}.smoothing[{i}]"
            if not isinstance(t, dict):
                ctx.fail(tp, "expected an object")
            _only(ctx, t, ("u", "v"), tp)
            u = _vector(ctx, _require(ctx, t, "u", tp), f"{tp}.u")
            v = _vector(ctx, _require(ctx, t, "v", tp), f"{tp}.v")
            for name, vec in (("u", u), ("v", v)):
                if vec["kind"] not in _FOURIER_VECTORS:
                    raise ValidationError(f"{tp}.{name}", "smoothing factors must be Fourier families")
                if vec["kind"] == "power_decay" and vec["exponent"] < 6:
                    raise ValidationError(f"{tp}.{name}", "smoothing factors must decay like |n|^-6 or faster")
            pairs.append({"u": u, "v": v})
        return {"kind": kind, "symbol": sym, "smoothing": pairs}
    if kind == "sum":
        _only(ctx, d, ("kind", "left", "right"), path)
        return {
            "kind": kind,
            "left": _operator(ctx, _require(ctx, d, "left", path), f"{path}.left"),
            "right": _operator(ctx, _require(ctx, d, "right", path), f"{path}.right"),
        }
    if kind == "scaled":
        _only(ctx, d, ("kind", "factor", "operator"), path)
        return {
            "kind": kind,
            "factor": _scalar(ctx, _require(ctx, d, "factor", path), f"{path}.factor"),
            "operator": _operator(ctx, _require(ctx, d, "operator", path), f"{path}.operator"),
        }
    ctx.fail(f"{path}.kind", f"unknown operator kind {kind!r}")


def operator_basis_kind(d):
    kind = d["kind"]
    if kind in ("separable_kernel", "sampled_kernel"):
        return GRID
    if kind in ("multiplier", "circle"):
        return FOURIER
    if kind == "matrix":
        return EUCLIDEAN
    if kind == "scaled":
        return operator_basis_kind(d["operator"])
    left, right = operator_basis_kind(d["left"]), operator_basis_kind(d["right"])
    if left != right:
        raise ValidationError("operator", f"cannot add a {left} operator to a {right} operator")
    return left


def _matrix_dim(d):
    if d["kind"] == "matrix":
        return len(d["entries"])
    if d["kind"] == "scaled":
        return _matrix_dim(d["operator"])
    if d["kind"] == "sum":
        a, b = _matrix_dim(d["left"]), _matrix_dim(d["right"])
        if a != b:
            raise ValidationError("operator", "matrices of different sizes")
        return a
    return None


def parse_problem(text):
    """Validate problem text and return a normalised :class:`ProblemSpec`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("<json>", exc.lineno, f"invalid JSON: {exc.msg} (line {exc.lineno})") from None
    ctx = _Ctx(text)
    if not isinstance(data, dict):
        raise ParseError("<document>", 1, "a problem is a JSON object")
    _only(ctx, data, _TOP_KEYS, "")
    op = _operator(ctx, _require(ctx, data, "operator", ""), "operator")
    kind = operator_basis_kind(op)

    rhs = data.get("rhs")
    if rhs is not None:
        rhs = _vector(ctx, rhs, "rhs")
        if kind == FOURIER and rhs["kind"] in _GRID_VECTORS:
            raise ValidationError("rhs", f"{rhs['kind']} right-hand sides live on a grid")
        if kind != FOURIER and rhs["kind"] in _FOURIER_VECTORS:
            raise ValidationError("rhs", f"{rhs['kind']} right-hand sides need a Fourier operator")
        if kind == EUCLIDEAN and rhs["kind"] != "explicit":
            raise ValidationError("rhs", "matrix problems take explicit right-hand sides")

    theta = _real(ctx, data.get("theta", DEFAULT_THETA), "theta")
    if not 0 < theta < 1:
        raise ValidationError("theta", "must lie in (0, 1)")
    tol = _real(ctx, data.get("tol", DEFAULT_TOL), "tol")
    if not tol > 0:
        raise ValidationError("tol", "must be positive")
    resolution = data.get("resolution")
    if kind == EUCLIDEAN:
        dim = _matrix_dim(op)
        if resolution is not None and _int(ctx, resolution, "resolution") != dim:
            raise ValidationError("resolution", f"matrix problems have resolution {dim}")
        resolution = dim
    elif resolution is None:
        resolution = DEFAULT_RESOLUTION[kind]
    resolution = _int(ctx, resolution, "resolution")
    if not 1 <= resolution <= MAX_INDEX:
        raise ValidationError("resolution", f"must lie in [1, {MAX_INDEX}]")
    if rhs is not None and rhs["kind"] == "explicit":
        dim = Basis(kind, resolution).dim
        if len(rhs["values"]) != dim:
            raise ValidationError("rhs.values", f"expected {dim} values at resolution {resolution}")
    return ProblemSpec(op, rhs, theta, tol, resolution)


def with_overrides(spec, theta=None, tol=None, resolution=None):
    """Re-validate ``spec`` with command-line overrides applied."""
    d = spec.to_dict()
    for key, value in (("theta", theta), ("tol", tol), ("resolution", resolution)):
        if value is not None:
            d[key] = value
    if d["rhs"] is None:
        del d["rhs"]
    return parse_problem(json.dumps(d))


# ---------------------------------------------------------------------------
# building operators and vectors
# ---------------------------------------------------------------------------


def _function(desc, names):
    if isinstance(desc, dict):
        coeffs = [_as_complex(c) for c in desc["poly"]]
        return lambda s, *rest: np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), coeffs)
    return compile_expression(desc, names)


def _sup_ratio(f, k):
    return float(np.max(f(k)))


def build_multiplier(sym):
    family = sym["family"]
    k = np.arange(MAX_INDEX + 2, dtype=float)
    if family == "geometric":
        q, c = sym["ratio"], _as_complex(sym["scale"])
        return DiagonalMultiplier(
            lambda n, q=q, c=c: c * q ** np.abs(n),
            order=-1.0,
            constant=abs(c) * _sup_ratio(lambda k: q**k * (1 + k), k),
            envelope=lambda k, q=q, c=abs(c): c * q ** np.asarray(k, dtype=float),
        )
    if family == "power":
        C, p = sym["constant"], sym["exponent"]
        return DiagonalMultiplier(
            lambda n, C=C, p=p: C * (1.0 + np.abs(n)) ** -p,
            order=-p,
            constant=abs(C),
            envelope=lambda k, C=abs(C), p=p: C * (1.0 + np.asarray(k, dtype=float)) ** -p,
        )
    if family == "inverse_quadratic":
        a, c = sym["shift"], _as_complex(sym["scale"])
        return DiagonalMultiplier(
            lambda n, a=a, c=c: c / (a + np.asarray(n, dtype=float) ** 2),
            order=-2.0,
            # slightly inflated so the declared bound survives rounding
            constant=abs(c) * _sup_ratio(lambda k: (1 + k) ** 2 / (a + k**2), k) * (1 + 1e-12),
            envelope=lambda k, a=a, c=abs(c): c / (a + np.asarray(k, dtype=float) ** 2),
        )
    values = {int(n): _as_complex(v) for n, v in sym["values"].items()}
    radius = max((abs(n) for n, v in values.items() if v != 0), default=-1)
    tail = np.zeros(MAX_INDEX + 3)
    for n, v in values.items():
        tail[abs(n)] = max(tail[abs(n)], abs(v))
    tail = np.maximum.accumulate(tail[::-1])[::-1]
    lookup = np.zeros(2 * MAX_INDEX + 1, dtype=complex)
    for n, v in values.items():
        lookup[n + MAX_INDEX] = v

    def symbol(n):
        n = np.asarray(n)
        out = np.zeros(n.shape, dtype=complex)
        inside = np.abs(n) <= MAX_INDEX
        out[inside] = lookup[n[inside] + MAX_INDEX]
        return out

    def envelope(kk):
        kk = np.asarray(kk).astype(int)
        return np.where(kk <= radius, tail[np.minimum(kk, MAX_INDEX + 2)], 0.0)

    const = max((abs(v) * (1 + abs(n)) for n, v in values.items()), default=0.0)
    return DiagonalMultiplier(symbol, order=-1.0, constant=const, envelope=envelope)


def _fourier_coefficients(desc):
    """Resolution-free coefficient function ``n -> value`` of a Fourier family."""
    kind = desc["kind"]
    if kind == "power_decay":
        p, c = desc["exponent"], _as_complex(desc["scale"])
        return lambda n: c * (1.0 + np.abs(n)) ** -p
    if kind == "geometric":
        q, c = desc["ratio"], _as_complex(desc["scale"])
        return lambda n: c * q ** np.abs(np.asarray(n, dtype=float))
    values = {int(n): _as_complex(v) for n, v in desc["coeffs"].items()}

    def coeffs(n):
        n = np.asarray(n)
        return np.array([values.get(int(m), 0.0) for m in n.ravel()], dtype=complex).reshape(n.shape)

    return coeffs


def build_operator(d, resolution):
    kind = d["kind"]
    if kind == "separable_kernel":
        terms = []
        for t in d["terms"]:
            a, b, c = _function(t["a"], ("s", "t", "x")), _function(t["b"], ("s", "t", "x")), _as_complex(t["scale"])
            terms.append((lambda s, a=a, c=c: c * a(s, s, s), lambda s, b=b: b(s, s, s)))
        return SeparableKernel(terms)
    if kind == "sampled_kernel":
        return SampledKernel.from_function(compile_expression(d["kernel"], ("s", "t")), resolution)
    if kind == "matrix":
        return FiniteMatrix([[_as_complex(v) for v in row] for row in d["entries"]])
    if kind == "multiplier":
        return build_multiplier(d["symbol"])
    if kind == "circle":
        return build_circle(d).operator
    if kind == "sum":
        return Sum(build_operator(d["left"], resolution), build_operator(d["right"], resolution))
    return Scaled(_as_complex(d["factor"]), build_operator(d["operator"], resolution))


def build_circle(d):
    if d["kind"] == "multiplier":
        return CircleOperator(build_multiplier(d["symbol"]))
    if d["kind"] != "circle":
        raise ValidationError("operator", "expected a circle or multiplier operator")
    smoothing = None
    if d["smoothing"]:
        terms = [(_fourier_coefficients(p["u"]), _fourier_coefficients(p["v"])) for p in d["smoothing"]]
        smoothing = SeparableKernel(terms, kind=FOURIER)
    return CircleOperator(build_multiplier(d["symbol"]), smoothing)


def build_rhs(desc):
    """``(fn, refinable)`` where ``fn(basis)`` samples the right-hand side."""
    kind = desc["kind"]
    if kind == "poly":
        coeffs = [_as_complex(c) for c in desc["coeffs"]]
        return (lambda b: CoeffVector(b, np.polynomial.polynomial.polyval(b.nodes, coeffs))), True
    if kind == "function":
        f = _function(desc["expr"], ("s",))
        return (lambda b: CoeffVector.from_function(f, b)), True
    if kind == "explicit":
        values = [_as_complex(v) for v in desc["values"]]
        return (lambda b: CoeffVector(b, values)), False
    if kind == "fourier":
        top = max(abs(int(n)) for n in desc["coeffs"]) if desc["coeffs"] else 0

        def fourier_rhs(b, f=_fourier_coefficients(desc)):
            if top > b.resolution:
                raise ValidationError("rhs.coeffs", f"index {top} beyond resolution {b.resolution}")
            return CoeffVector.from_function(f, b)

        return fourier_rhs, True
    f = _fourier_coefficients(desc)
    return (lambda b: CoeffVector.from_function(f, b)), True


@dataclass(frozen=True, eq=False)
class Problem:
    spec: ProblemSpec
    operator: object
    basis: Basis
    rhs: object
    rhs_refinable: bool

    def y(self):
        if self.rhs is None:
            raise ValidationError("rhs", "this command needs a right-hand side")
        return self.rhs(self.basis)


def build(spec):
    try:
        op = build_operator(spec.operator, spec.resolution)
    except FredholmError:
        raise
    except (ValueError, TypeError) as exc:
        raise ValidationError("operator", str(exc)) from exc
    rhs, refinable = build_rhs(spec.rhs) if spec.rhs is not None else (None, False)
    return Problem(spec, op, spec.basis, rhs, refinable)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _basis_json(b):
    return {"kind": b.kind, "resolution": b.resolution}


def vector_json(v):
    c = v.coeffs
    truncated = c.size > ECHO_LIMIT
    c = c[:ECHO_LIMIT]
    return {
        "basis": _basis_json(v.basis),
        "truncated": bool(truncated),
        "re": [float(z) for z in c.real],
        "im": [float(z) for z in c.imag],
    }


def vector_from_json(d):
    basis = Basis(d["basis"]["kind"], d["basis"]["resolution"])
    return CoeffVector(basis, np.asarray(d["re"]) + 1j * np.asarray(d["im"]))


def _diagnostics_json(diag):
    return {
        "resolution": _basis_json(diag.resolution),
        "kappa": _num(diag.kappa),
        "r": diag.r,
        "sigma_min": _num(diag.sigma_min),
        "neumann_terms": diag.neumann_terms,
        "neumann_eps": _num(diag.neumann_eps),
        "method": diag.method,
        "inverse_bound": _num(diag.inverse_bound),
    }


def _error_json(exc):
    return {"name": type(exc).__name__, "message": str(exc)}


def outcome_report(outcome, cert):
    vec = outcome.x if isinstance(outcome, Solution) else outcome.y_star
    return {
        "outcome": outcome.kind,
        "error": None,
        "residuals": {
            "same_resolution": _num(cert.residual),
            "doubled_resolution": _num(cert.residual_doubled),
            "doubled": _basis_json(cert.resolution_doubled) if cert.resolution_doubled else None,
        },
        "diagnostics": _diagnostics_json(outcome.diagnostics),
        "vector": vector_json(vec),
    }


def error_report(exc):
    return {"outcome": "error", "error": _error_json(exc), "residuals": None, "diagnostics": None, "vector": None}


def _timed(fn):
    t0 = time.perf_counter()
    try:
        report = fn()
    except FredholmError as exc:
        report = error_report(exc)
    report["timing"] = {"seconds": time.perf_counter() - t0}
    return report


def run(spec):
    """Full pipeline: split, reduce, solve, certify.  Never raises library errors."""

    def go():
        prob = build(spec)
        y = prob.y()
        outcome = solve(prob.operator, y, spec.theta, spec.tol)
        cert = certify(prob.operator, outcome, y, rhs=prob.rhs if prob.rhs_refinable else None)
        return outcome_report(outcome, cert)

    return _timed(go)


def split_report(spec):
    def go():
        prob = build(spec)
        sp = split(prob.operator, spec.theta, prob.basis)
        return {
            "outcome": "splitting",
            "error": None,
            "method": sp.method,
            "order": sp.order,
            "kappa": _num(sp.kappa),
            "theta": sp.theta,
            "rank": sp.F.rank,
            "resolution": _basis_json(prob.basis),
        }

    return _timed(go)


def bap_report(spec, N_list=(8, 16, 32, 64)):
    def go():
        prob = build(spec)
        if prob.basis.kind != FOURIER:
            raise ValidationError("operator", "the probe needs a Fourier-basis operator")
        try:
            rows = bap_convergence_probe(prob.operator, N_list)
        except TypeError as exc:
            raise ValidationError("operator", str(exc)) from exc
        orders = observed_orders(rows)
        return {
            "outcome": "probe",
            "error": None,
            "rows": [
                {"N": r.N, "measured_tail": _num(r.measured_tail), "certified_tail": _num(r.certified_tail)}
                for r in rows
            ],
            "observed_orders": [_num(o) for o in orders],
            "sound": all(r.measured_tail <= r.certified_tail * (1 + 1e-10) for r in rows),
        }

    return _timed(go)


def psido_report(spec, steps=4):
    def go():
        if spec.basis_kind != FOURIER:
            raise ValidationError("operator", "psido problems use circle or multiplier operators")
        P = build_circle(spec.operator)
        prob = build(spec)
        y = prob.y()
        outcome = solve_smooth(P, y, tol=spec.tol, theta=spec.theta)
        cert = certify(P.operator, outcome, y, rhs=prob.rhs if prob.rhs_refinable else None)
        report = outcome_report(outcome, cert)
        if isinstance(outcome, Solution):
            report["sobolev"] = {str(s): _num(v) for s, v in outcome.diagnostics.extras["sobolev"].items()}
            boot = bootstrap_check(P, y, outcome.x, steps)
            report["bootstrap"] = {
                "passed": boot.passed,
                "slack": boot.slack,
                "equation_residual": _num(boot.equation_residual),
                "steps": [
                    {
                        "s": st.s,
                        "solution_norm": _num(st.solution_norm),
                        "rhs_norm": _num(st.rhs_norm),
                        "gain_term": _num(st.gain_term),
                        "smoothing_term": _num(st.smoothing_term),
                    }
                    for st in boot.steps
                ],
            }
            try:
                fit = decay_exponent(outcome.x)
                report["decay"] = {"slope": _num(fit.slope), "residual": _num(fit.residual), "points": fit.points}
            except FredholmError as exc:
                report["decay"] = {"error": _error_json(exc)}
        return report

    return _timed(go)


def dump_report(report):
    return json.dumps(report, indent=2, allow_nan=False)
