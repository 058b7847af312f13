"""Truncated Poincare series: coset enumeration, evaluation, cycle integrals."""

import math

import pytest

from mocktrace.arith import zeta_real
from mocktrace.poincare import (
    B_factor,
    coset_reps,
    eval_Gm,
    eval_GmQ,
    phi_ms,
    prop1_lhs,
)
from mocktrace.poincare import _semicircle_integral, _split_ray_integral
from mocktrace.qform import QuadForm


class TestCosetReps:
    def test_bound_one(self):
        reps = coset_reps(1)
        assert sorted(r.bottom for r in reps) == [(0, 1), (1, -1), (1, 0), (1, 1)]

    def test_determinants_and_coprimality(self):
        for r in coset_reps(12):
            g = r.matrix
            assert g.a * g.d - g.b * g.c == 1
            c, d = r.bottom
            assert (g.c, g.d) == (c, d)
            assert c >= 0
            assert math.gcd(c, abs(d)) == 1

    def test_count_matches_euler_phi_structure(self):
        # for each c >= 1 the number of admissible d in [-B, B] is
        # 2B * phi(c)/c asymptotically; just pin the exact count once
        assert len(coset_reps(10)) == 1 + sum(
            1
            for c in range(1, 11)
            for d in range(-10, 11)
            if math.gcd(c, abs(d)) == 1
        )

    def test_deterministic_order(self):
        assert [r.bottom for r in coset_reps(2)] == [
            (0, 1),
            (1, -2),
            (1, -1),
            (1, 0),
            (1, 1),
            (1, 2),
            (2, -1),
            (2, 1),
        ]


class TestPhi:
    def test_m_zero_power(self):
        assert phi_ms(0, 1.7, 2.3) == pytest.approx(2.3**1.7, rel=1e-14)

    def test_sinh_at_s_one(self):
        for y in (0.3, 0.7, 1.5):
            assert phi_ms(1, 1.0, y) == pytest.approx(2 * math.sinh(2 * math.pi * y), rel=1e-12)
            assert phi_ms(-2, 1.0, y) == pytest.approx(2 * math.sinh(4 * math.pi * y), rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            phi_ms(1, 2.0, 0.0)


class TestBFactor:
    def test_known_values(self):
        assert B_factor(2.0) == pytest.approx(4.0, rel=1e-13)
        assert B_factor(1.0) == pytest.approx(2 * math.pi, rel=1e-13)


class TestEvalGm:
    def test_m0_matches_full_lattice_sum(self):
        tau = complex(0.3, 1.0)
        s = 2.0
        B = 100
        brute = 0.0
        for c in range(-B, B + 1):
            for d in range(-B, B + 1):
                if c == 0 and d == 0:
                    continue
                w = c * tau + d
                brute += (tau.imag / abs(w) ** 2) ** s
        got = eval_Gm(0, tau, s, B)
        assert abs(got.imag) < 1e-12
        assert got.real == pytest.approx(brute / (2 * zeta_real(2 * s)), rel=1e-3)

    def test_reflection_symmetry_exact(self):
        # the coset box is symmetric under d -> -d, so G(-conj tau) = conj G(tau)
        for m in (0, 1):
            tau = complex(0.37, 0.9)
            a = eval_Gm(m, complex(-tau.real, tau.imag), 1.5, 60)
            b = eval_Gm(m, tau, 1.5, 60)
            assert abs(a - b.conjugate()) < 1e-10 * max(1.0, abs(b))

    def test_translation_approximate_invariance(self):
        tau = complex(0.2, 1.1)
        a = eval_Gm(0, tau + 1, 2.0, 150)
        b = eval_Gm(0, tau, 2.0, 150)
        assert abs(a - b) < 1e-3 * abs(b)

    def test_domain(self):
        with pytest.raises(ValueError):
            eval_Gm(0, complex(0.0, -1.0), 2.0, 10)
        with pytest.raises(ValueError):
            eval_Gm(0, complex(0.0, 1.0), 1.0, 10)


class TestEvalGmQ:
    def test_removes_exactly_the_root_cosets(self):
        Q = QuadForm(0, 1, 0)  # roots 0 and infinity
        tau = complex(0.25, 1.3)
        s = 1.8
        m = 1
        full = eval_Gm(m, tau, s, 40)
        cut = eval_GmQ(m, Q, tau, s, 40)
        # identity coset: e(-m Re tau) phi(Im tau); (1, 0) coset: gamma tau = -1/tau
        w = -1.0 / tau
        expected = cut
        expected += phi_ms(m, s, tau.imag) * complex(
            math.cos(2 * math.pi * m * tau.real), -math.sin(2 * math.pi * m * tau.real)
        )
        expected += phi_ms(m, s, w.imag) * complex(
            math.cos(2 * math.pi * m * w.real), -math.sin(2 * math.pi * m * w.real)
        )
        assert abs(full - expected) < 1e-9 * max(1.0, abs(full))

    def test_finite_near_cusp(self):
        # the raw series blows up toward the cusp; the corrected one stays modest
        Q = QuadForm(0, 1, 0)
        val = eval_GmQ(1, Q, complex(0.0, 40.0), 1.5, 60)
        assert abs(val) < 50.0


class TestProp1Lhs:
    def test_small_bound_m0(self):
        val, err = prop1_lhs(1, 1, 0, 2.0, bound=80)
        assert val == pytest.approx(0.625, abs=5e-3)
        assert err > 0

    def test_ray_and_semicircle_routes_agree(self):
        Q = QuadForm(1, 2, 0)
        ray, _ = _split_ray_integral(0, Q, 2.0, 80, 15.0)
        semi, _ = _semicircle_integral(0, Q, 2.0, 80)
        # the direct semicircle route converges only like 1/bound
        assert semi == pytest.approx(ray, abs=0.1)

    def test_domain(self):
        with pytest.raises(ValueError):
            prop1_lhs(5, 1, 0, 2.0, bound=20)  # dD not square
        with pytest.raises(ValueError):
            prop1_lhs(1, 1, 0, 1.1, bound=20)  # s out of range
        with pytest.raises(ValueError):
            prop1_lhs(1, 1, -1, 2.0, bound=20)
