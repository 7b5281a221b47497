"""Acceptance criteria 1-9.

Each test records one PASS/FAIL line; the lines are printed at the end of
a pytest run, or directly with ``python3 tests/test_acceptance.py``.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import ACCEPTANCE, kernel_st  # noqa: E402
from fredholm.approximation import bap_convergence_probe, observed_orders  # noqa: E402
from fredholm.circle import (  # noqa: E402
    CircleOperator,
    bootstrap_check,
    decay_exponent,
    power_decay,
    solve_smooth,
)
from fredholm.errors import AmbiguousSingularity, EquivalenceViolated  # noqa: E402
from fredholm.lab import (  # noqa: E402
    SingularSystem,
    corollary_check,
    dense_oracle_solve,
    lemma_equivalences,
    random_continuous_matrix,
    random_corollary_pair,
    random_integer_matrix,
)
from fredholm.neumann import neumann_block, terms_needed  # noqa: E402
from fredholm.operators import (  # noqa: E402
    CoeffVector,
    DiagonalMultiplier,
    FiniteMatrix,
    SampledKernel,
    SeparableKernel,
    euclidean,
    fourier,
    grid,
)
from fredholm.solver import FixedVector, Solution, certify, solve  # noqa: E402


def record(number, ok, detail):
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, ACCEPTANCE[number]


def s_vec(basis):
    return CoeffVector.from_function(lambda s: s, basis)


def test_1_lemma_suite():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    agree = total = 0
    for gen in (random_integer_matrix, random_continuous_matrix):
        for _ in range(1000):
            S = gen(rng, int(rng.integers(1, 9)))
            total += 1
            try:
                rep = lemma_equivalences(S)
            except EquivalenceViolated:
                continue
            agree += rep.inj_V == rep.inj_M and rep.surj_V == rep.surj_M
    elapsed = time.perf_counter() - t0
    record(1, agree == total and elapsed < 10, f"{agree}/{total} agree, {elapsed:.2f} s (limit 10 s)")


def test_2_corollary_suite():
    rng = np.random.default_rng(2025)
    t0 = time.perf_counter()
    agree = singular = 0
    for _ in range(500):
        R, F = random_corollary_pair(rng, int(rng.integers(1, 9)))
        try:
            rep = corollary_check(R, F)
        except EquivalenceViolated:
            continue
        agree += rep.injective == rep.surjective
        singular += not rep.injective
    elapsed = time.perf_counter() - t0
    record(2, agree == 500 and elapsed < 10,
           f"{agree}/500 agree ({singular} singular), {elapsed:.2f} s (limit 10 s)")


def test_3_closed_form_solve():
    t0 = time.perf_counter()
    b = grid(64)
    out = solve(kernel_st(), s_vec(b), theta=0.5, tol=1e-8)
    cert = certify(kernel_st(), out, rhs=s_vec)
    elapsed = time.perf_counter() - t0
    err = float(np.max(np.abs(out.x.coeffs - 1.5 * b.nodes))) if isinstance(out, Solution) else np.inf
    ok = isinstance(out, Solution) and err <= 1e-8 and cert.residual_doubled <= 1e-7 and elapsed < 1
    record(3, ok, f"{out.kind}, max node error {err:.2e}, doubled residual {cert.residual_doubled:.2e}, {elapsed:.3f} s")


def test_4_fixed_vector_recovery():
    b = grid(64)
    out = solve(kernel_st(3.0), s_vec(b), theta=0.5, tol=1e-8)
    ok = isinstance(out, FixedVector)
    cos = res = np.nan
    if ok:
        w = np.sqrt(b.weights)
        s = w * b.nodes
        y = w * out.y_star.coeffs
        cos = abs(np.vdot(s, y)) / (np.linalg.norm(s) * np.linalg.norm(y))
        res = out.residual
        ok = cos >= 1 - 1e-6 and res <= 1e-8
    record(4, ok, f"{out.kind}, |cos| = {cos:.15f}, residual {res:.2e}")


# -- criterion 5 --------------------------------------------------------------


def _random_separable(rng, b):
    """Degenerate kernel with r <= 4 polynomial terms, coefficients in [-2, 2].

    Every third problem is rescaled so that 1 is an eigenvalue of T.
    """
    r = int(rng.integers(1, 5))
    A = rng.uniform(-2, 2, (r, 4))
    B = rng.uniform(-2, 2, (r, 4))
    scale = 1.0
    planted = False
    if rng.random() < 1 / 3:
        # eigenvalues of T are those of M[i, j] = int b_i a_j
        Pa = np.polynomial.polynomial.polyvander(b.nodes, 3) @ A.T
        Pb = np.polynomial.polynomial.polyvander(b.nodes, 3) @ B.T
        lam = np.linalg.eigvals(Pb.T @ (b.weights[:, None] * Pa))
        real = lam[(np.abs(lam.imag) < 1e-12) & (np.abs(lam) > 1e-3)]
        if real.size:
            scale = 1.0 / real[0].real
            planted = True
    terms = [
        (lambda s, c=A[i] * scale: np.polynomial.polynomial.polyval(s, c),
         lambda t, c=B[i]: np.polynomial.polynomial.polyval(t, c))
        for i in range(r)
    ]
    return SeparableKernel(terms), planted


def test_5_oracle_equivalence():
    rng = np.random.default_rng(5)
    b = grid(64)
    matched = gray = compared = planted_n = 0
    worst = 0.0
    mismatches = []
    for k in range(100):
        T, planted = _random_separable(rng, b)
        planted_n += planted
        y = CoeffVector.from_function(lambda s, c=rng.uniform(-2, 2, 3): np.polynomial.polynomial.polyval(s, c), b)
        try:
            out = solve(T, y, theta=0.5, tol=1e-8)
        except AmbiguousSingularity:
            gray += 1
            continue
        oracle = dense_oracle_solve(T, y)
        compared += 1
        if isinstance(oracle, SingularSystem) != isinstance(out, FixedVector):
            mismatches.append(k)
            continue
        matched += 1
        if isinstance(out, Solution):
            worst = max(worst, (out.x - oracle).norm() / oracle.norm())
    ok = matched == compared and worst <= 1e-6 and gray < 5
    record(5, ok, f"{matched}/{compared} branches match ({planted_n} planted), worst rel. error {worst:.2e}, "
                  f"gray zone {gray}/100" + (f", mismatches {mismatches}" if mismatches else ""))


def test_6_neumann_certificate():
    rng = np.random.default_rng(6)
    worst = 0.0
    ok = True
    for kappa in (0.25, 0.5, 0.9):
        d = kappa * rng.uniform(-1, 1, 16)
        d[0] = kappa
        K = FiniteMatrix(np.diag(d))
        J = terms_needed(kappa, 1e-6)
        for _ in range(20):
            y = rng.standard_normal(16) + 1j * rng.standard_normal(16)
            Z, _ = neumann_block(K, kappa, y, euclidean(16), 1e-6)
            err = np.linalg.norm(Z[:, 0] - y / (1 - d))
            bound = kappa ** (J + 1) * np.linalg.norm(y) / (1 - kappa) * (1 + 1e-10)
            ok &= err <= bound
            worst = max(worst, err / bound)
    record(6, ok, f"max error/bound ratio {worst:.3e} over 60 cases")


def test_7_bap_convergence():
    m = DiagonalMultiplier(lambda n: (1.0 + np.abs(n)) ** -2, order=-2, constant=1.0)
    rows = bap_convergence_probe(m, [8, 16, 32, 64])
    sound = all(r.measured_tail <= r.certified_tail for r in rows)
    N = np.log([r.N for r in rows])
    ls_slope = float(np.polyfit(N, np.log([r.certified_tail for r in rows]), 1)[0])
    finest = observed_orders(rows)[-1]
    ok = sound and -2.1 <= finest <= -1.9
    record(7, ok, f"measured <= certified at all N: {sound}; observed order (N=32->64) {finest:.3f}; "
                  f"least-squares slope over all N {ls_slope:.3f}")


def test_8_psido_regularity():
    m = DiagonalMultiplier(
        lambda n: 1.0 / (2.0 + np.asarray(n, float) ** 2),
        order=-2,
        constant=1.5,
        envelope=lambda k: 1.0 / (2.0 + np.asarray(k, float) ** 2),
    )
    P = CircleOperator(m)
    x = power_decay(fourier(256), 8)
    out = solve_smooth(P, x)
    ok = isinstance(out, Solution)
    slope = np.nan
    passed = False
    if ok:
        slope = decay_exponent(out.x).slope
        passed = bootstrap_check(P, x, out.x, steps=4, slack=0.1).passed
        ok = abs(slope + 8) <= 0.5 and passed
    record(8, ok, f"{out.kind}, decay exponent {slope:.3f}, bootstrap 4 steps passed: {passed}")


def _solution_fixtures():
    b = grid(64)
    yield "kernel st", kernel_st(), s_vec(b)
    T = SampledKernel.from_function(lambda s, t: np.exp(s * t) / 2, 32)
    yield "sampled exp(st)/2", T, CoeffVector.from_function(np.sin, T.basis)
    yield "diag(.5, .25)", FiniteMatrix(np.diag([0.5, 0.25])), CoeffVector(euclidean(2), [1.0, 1.0])
    m = DiagonalMultiplier(lambda n: 1.0 / (2.0 + np.asarray(n, float) ** 2), order=-2, constant=1.5)
    yield "multiplier 1/(2+n^2)", m, power_decay(fourier(128), 8)


def test_9_scale_invariance():
    ok = True
    worst = 0.0
    for name, T, y in _solution_fixtures():
        base = solve(T, y)
        assert isinstance(base, Solution), name
        for c in (-1, 2, 10):
            out = solve(T, c * y)
            same = type(out) is Solution
            err = (out.x - c * base.x).norm() / (abs(c) * y.norm()) if same else np.inf
            worst = max(worst, err)
            ok &= same and err <= 1e-8
    record(9, ok, f"branch fixed for c in (-1, 2, 10) on 4 fixtures, worst relative deviation {worst:.2e} (tol 1e-8)")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        try:
            t()
        except AssertionError:
            pass
    for key in sorted(ACCEPTANCE):
        print(ACCEPTANCE[key])
    sys.exit(0 if all("PASS" in line for line in ACCEPTANCE.values()) else 1)
