import numpy as np
import pytest

from fredholm.circle import (
    CircleOperator,
    bootstrap_check,
    decay_exponent,
    power_decay,
    sobolev_norm,
    solve_smooth,
)
from fredholm.errors import BootstrapViolated, InsufficientSupport, NegativeS
from fredholm.operators import CoeffVector, DiagonalMultiplier, SeparableKernel, apply, fourier, grid
from fredholm.solver import FixedVector, Solution


def shifted(shift=2.0, C=1.5):
    return DiagonalMultiplier(
        lambda n: 1.0 / (shift + np.asarray(n, float) ** 2),
        order=-2,
        constant=C,
        envelope=lambda k: 1.0 / (shift + np.asarray(k, float) ** 2),
    )


class TestSobolev:
    def test_e0(self):
        for s in (0, 1, 3.5):
            assert sobolev_norm(CoeffVector.unit(fourier(4), 0), s).value == 1.0

    def test_e2(self):
        assert sobolev_norm(CoeffVector.unit(fourier(4), 2), 1).value == pytest.approx(np.sqrt(5))

    def test_zero(self):
        assert sobolev_norm(CoeffVector.zeros(fourier(3)), 2).value == 0

    def test_negative(self):
        with pytest.raises(NegativeS):
            sobolev_norm(CoeffVector.zeros(fourier(3)), -1)

    def test_s0_is_norm(self, rng):
        x = CoeffVector(fourier(10), rng.standard_normal(21))
        assert sobolev_norm(x, 0).value == pytest.approx(x.norm(), rel=1e-15)

    def test_monotone(self, rng):
        for _ in range(20):
            x = CoeffVector(fourier(10), rng.standard_normal(21) + 1j * rng.standard_normal(21))
            vals = [sobolev_norm(x, s).value for s in (0, 0.5, 1, 2, 4)]
            assert vals == sorted(vals)

    def test_needs_fourier(self):
        with pytest.raises(ValueError):
            sobolev_norm(CoeffVector.zeros(grid(3)), 1)


class TestCircleOperator:
    def test_requires_negative_order(self):
        with pytest.raises(ValueError):
            CircleOperator(DiagonalMultiplier(lambda n: 0.5 + 0 * n, order=0, constant=0.5))

    def test_requires_constant(self):
        with pytest.raises(ValueError):
            CircleOperator(DiagonalMultiplier(lambda n: 0.5 ** np.abs(n), order=-1, envelope=lambda k: 0.5**k))

    def test_grid_smoothing_rejected(self):
        with pytest.raises(ValueError):
            CircleOperator(shifted(), SeparableKernel([(np.sin, np.cos)]))

    def test_order_bound(self, rng):
        # ||P x||_{H^{s-m}} <= C ||x||_{H^s}
        P = CircleOperator(shifted())
        b = fourier(40)
        for _ in range(50):
            x = CoeffVector(b, rng.standard_normal(b.dim) + 1j * rng.standard_normal(b.dim))
            for s in (0, 1, 2):
                lhs = sobolev_norm(apply(P.operator, x), s + 2).value
                assert lhs <= P.constant * sobolev_norm(x, s).value * (1 + 1e-12)


class TestSolveSmooth:
    def test_single_mode(self):
        out = solve_smooth(CircleOperator(shifted()), CoeffVector.unit(fourier(32), 1))
        assert isinstance(out, Solution)
        assert out.x[1] == pytest.approx(1.5, rel=1e-10)
        assert set(out.diagnostics.extras["sobolev"]) == {0, 1, 2, 4}
        assert out.diagnostics.extras["sobolev"][1] == pytest.approx(1.5 * np.sqrt(2), rel=1e-10)

    def test_fixed_e0(self):
        out = solve_smooth(CircleOperator(shifted(1.0, 2.0)), CoeffVector.unit(fourier(32), 2))
        assert isinstance(out, FixedVector)
        assert abs(out.y_star[0]) == pytest.approx(1.0)

    def test_rank_one_smoothing_fixed_vector(self):
        # zero multiplier + 3 u <v, .> with <v, u> = 1/3 has fixed vector u
        zero = DiagonalMultiplier(lambda n: 0.0 * np.asarray(n, float), order=-1, constant=1.0)
        u = lambda n: 0.5 ** np.abs(np.asarray(n, float))
        b = fourier(64)
        uu = float(np.sum(np.abs(u(b.nodes)) ** 2))
        G = SeparableKernel([(lambda n: 3 * u(n), lambda n: u(n) / (3 * uu))], kind="fourier")
        out = solve_smooth(CircleOperator(zero, G), CoeffVector.unit(b, 0))
        assert isinstance(out, FixedVector)
        ustar = u(b.nodes) / np.sqrt(uu)
        assert abs(np.vdot(ustar, out.y_star.coeffs)) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("n0", [0, 1, 3])
    def test_injective_iff_surjective_witness(self, n0):
        # sigma(n0) = 1 exactly gives a fixed vector; otherwise a solution
        m = DiagonalMultiplier(lambda n: np.where(np.abs(n) == n0, 1.0, 0.25 / (1.0 + np.asarray(n, float) ** 2)), order=-2, constant=(1.0 + n0) ** 2)
        out = solve_smooth(CircleOperator(m), CoeffVector.unit(fourier(16), 5))
        assert isinstance(out, FixedVector)
        m2 = DiagonalMultiplier(lambda n: 0.25 / (1.0 + np.asarray(n, float) ** 2), order=-2, constant=1.0)
        assert isinstance(solve_smooth(CircleOperator(m2), CoeffVector.unit(fourier(16), 5)), Solution)


class TestBootstrap:
    def test_single_mode(self):
        P = CircleOperator(shifted())
        x = CoeffVector.unit(fourier(32), 1)
        out = solve_smooth(P, x)
        rep = bootstrap_check(P, x, out.x, steps=4)
        assert rep.passed and len(rep.steps) == 5
        for st in rep.steps:
            assert st.solution_norm == pytest.approx(1.5 * 2 ** (st.s / 2), rel=1e-10)

    def test_zero(self):
        P = CircleOperator(shifted())
        z = CoeffVector.zeros(fourier(8))
        rep = bootstrap_check(P, z, z)
        assert rep.passed and all(st.solution_norm == 0 for st in rep.steps)

    def test_power_decay_preserved(self):
        P = CircleOperator(shifted())
        x = power_decay(fourier(256), 8)
        out = solve_smooth(P, x)
        assert bootstrap_check(P, x, out.x).passed
        assert decay_exponent(out.x).slope == pytest.approx(-8, abs=0.5)

    def test_violation_detected(self):
        P = CircleOperator(shifted())
        x = CoeffVector.unit(fourier(8), 1)
        fake = CoeffVector.unit(fourier(8), 8) * 10
        with pytest.raises(BootstrapViolated):
            bootstrap_check(P, x, fake)

    def test_with_smoothing(self):
        G = SeparableKernel(
            [(lambda n: 0.3 ** np.abs(np.asarray(n, float)), lambda n: 0.1 * (1.0 + np.abs(n)) ** -8.0)], kind="fourier"
        )
        P = CircleOperator(shifted(), G)
        x = power_decay(fourier(128), 8)
        out = solve_smooth(P, x)
        rep = bootstrap_check(P, x, out.x)
        assert rep.passed
        assert rep.equation_residual <= 1e-8 * x.norm()


class TestDecay:
    def test_exact_power(self):
        assert decay_exponent(power_decay(fourier(128), 3)).slope == pytest.approx(-3, abs=1e-6)

    def test_single_mode(self):
        with pytest.raises(InsufficientSupport):
            decay_exponent(CoeffVector.unit(fourier(64), 5))

    def test_geometric_steeper(self):
        x = CoeffVector.from_function(lambda n: 2.0 ** -np.abs(np.asarray(n, float)), fourier(64))
        assert decay_exponent(x).slope < -6
