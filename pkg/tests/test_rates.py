"""Tests for the closed-form rate functionals."""
import math

import numpy as np
import pytest

from conftest import random_admissible_path
from resetsim import (
    PiecewiseLinearPath,
    Violation,
    classify_tilde_ac0,
    flat_then_ramp,
    nonzero_measure,
    ramp,
    rate_poisson,
    rate_reset,
    rate_wiener,
    sup_rate,
    zero_path,
)
from test_paths import two_ramp_path


class TestClassify:
    def test_zero_path_is_member(self):
        assert classify_tilde_ac0(zero_path()) is None

    def test_ramp_is_member(self):
        assert classify_tilde_ac0(ramp(1.0)) is None

    def test_jump_landing_at_zero_is_member(self):
        assert classify_tilde_ac0(two_ramp_path()) is None

    def test_nonzero_start(self):
        p = PiecewiseLinearPath([0.0, 1.0], [0.2, 0.5], [])
        assert classify_tilde_ac0(p) is Violation.NONZERO_START

    def test_jump_to_nonzero(self):
        p = PiecewiseLinearPath([0.0, 0.5, 1.0], [0.0, 0.1, 0.3], [True])
        assert classify_tilde_ac0(p) is Violation.JUMP_TO_NONZERO


class TestMeasure:
    def test_zero_path(self):
        assert nonzero_measure(zero_path()) == 0.0

    def test_ramp_full_measure(self):
        # the single zero at t=0 has measure zero
        assert nonzero_measure(ramp(1.0)) == 1.0

    def test_flat_then_ramp(self):
        p = flat_then_ramp(0.25, 0.4)
        assert nonzero_measure(p) == pytest.approx(0.75)

    def test_interior_crossing_counts_fully(self):
        p = PiecewiseLinearPath([0.0, 0.2, 1.0], [0.0, -0.5, 0.5], [False])
        assert nonzero_measure(p) == pytest.approx(1.0)


class TestRateReset:
    def test_zero_path(self):
        r = rate_reset(zero_path(), 1.0)
        assert r.finite and r.value == 0.0

    def test_unit_ramp(self):
        r = rate_reset(ramp(1.0), 1.0)
        assert r.value == pytest.approx(1.5)
        assert r.reset_term == pytest.approx(1.0)
        assert r.kinetic_term == pytest.approx(0.5)

    def test_two_ramps_with_reset(self):
        r = rate_reset(two_ramp_path(), 2.0)
        assert r.value == pytest.approx(2.18)
        assert r.reset_term == pytest.approx(2.0)
        assert r.kinetic_term == pytest.approx(0.18)

    def test_nonzero_start_infinite(self):
        p = PiecewiseLinearPath([0.0, 1.0], [0.2, 0.5], [])
        r = rate_reset(p, 1.0)
        assert not r.finite
        assert math.isinf(r.value)
        assert r.violation is Violation.NONZERO_START

    def test_decomposition(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p = random_admissible_path(rng)
            r = rate_reset(p, 0.7)
            assert r.finite
            assert r.value == pytest.approx(r.reset_term + r.kinetic_term)

    def test_rejects_bad_lam(self):
        with pytest.raises(ValueError):
            rate_reset(zero_path(), 0.0)
        with pytest.raises(ValueError):
            rate_reset(zero_path(), -1.0)


class TestRateWiener:
    def test_zero_path(self):
        assert rate_wiener(zero_path()).value == 0.0

    def test_slope_two_ramp(self):
        assert rate_wiener(ramp(2.0)).value == pytest.approx(2.0)

    def test_jump_not_admissible(self):
        r = rate_wiener(two_ramp_path())
        assert not r.finite
        assert r.violation is Violation.NOT_ADMISSIBLE

    def test_nonzero_start_not_admissible(self):
        p = PiecewiseLinearPath([0.0, 1.0], [0.3, 0.5], [])
        assert rate_wiener(p).violation is Violation.NOT_ADMISSIBLE


class TestRatePoisson:
    def test_matching_slope_costs_nothing(self):
        assert rate_poisson(ramp(2.0), 2.0).value == pytest.approx(0.0)

    def test_double_speed_ramp(self):
        r = rate_poisson(ramp(2.0), 1.0)
        assert r.value == pytest.approx(2.0 * math.log(2.0) - 1.0)

    def test_zero_path_pays_lambda(self):
        assert rate_poisson(zero_path(), 0.7).value == pytest.approx(0.7)

    def test_decreasing_rejected(self):
        r = rate_poisson(ramp(-1.0), 1.0)
        assert not r.finite
        assert r.violation is Violation.DECREASING_POISSON

    def test_jump_rejected(self):
        assert rate_poisson(two_ramp_path(), 1.0).violation is \
            Violation.DECREASING_POISSON

    def test_flat_segments_pay_lambda_per_unit_time(self):
        p = flat_then_ramp(0.5, 1.0)
        r = rate_poisson(p, 1.0)
        # flat half pays lambda * 0.5; the unit-slope half pays
        # (1*ln(1/1) - 1 + 1) * 0.5 = 0
        assert r.value == pytest.approx(0.5)


class TestJsonShape:
    def test_finite_result(self):
        d = rate_reset(ramp(1.0), 1.0).to_json_dict()
        assert d["finite"] is True
        assert d["value"] == pytest.approx(1.5)
        assert d["violation"] is None

    def test_infinite_result_nulls_value(self):
        p = PiecewiseLinearPath([0.0, 1.0], [0.2, 0.5], [])
        d = rate_reset(p, 1.0).to_json_dict()
        assert d["finite"] is False
        assert d["value"] is None
        assert d["violation"] == "NonzeroStart"


class TestInvariants:
    def test_scaling_law(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            p = random_admissible_path(rng)
            c = float(rng.uniform(0.5, 3.0))
            base = rate_reset(p, 1.3)
            scaled = rate_reset(p.scale(c), 1.3)
            assert scaled.reset_term == pytest.approx(base.reset_term, abs=1e-12)
            assert scaled.kinetic_term == pytest.approx(
                c * c * base.kinetic_term, rel=1e-10, abs=1e-12)

    def test_cauchy_schwarz_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            p = random_admissible_path(rng)
            r = rate_reset(p, 1.0)
            lhs = p.sup_abs() ** 2
            rhs = nonzero_measure(p) * 2.0 * r.kinetic_term
            assert lhs <= rhs * (1 + 1e-12) + 1e-12

    def test_rate_dominates_sup_rate(self):
        rng = np.random.default_rng(4)
        for lam in (0.5, 1.0, 2.0):
            for _ in range(50):
                p = random_admissible_path(rng)
                r = rate_reset(p, lam)
                bound = sup_rate(p.sup_abs(), lam).rate
                assert r.value >= bound - 1e-10

    def test_concatenation_additivity(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            s = float(rng.uniform(0.3, 0.7))
            a_mid = float(rng.uniform(-1.0, 1.0))
            b_mid = float(rng.uniform(-1.0, 1.0))
            b_end = float(rng.uniform(-1.0, 1.0))
            # f passes through 0 at time s; g1/g2 isolate its two halves
            f = PiecewiseLinearPath(
                [0.0, s / 2, s, (1 + s) / 2, 1.0],
                [0.0, a_mid, 0.0, b_mid, b_end], [False] * 3)
            g1 = PiecewiseLinearPath([0.0, s / 2, s, 1.0],
                                     [0.0, a_mid, 0.0, 0.0], [False] * 2)
            g2 = PiecewiseLinearPath([0.0, s, (1 + s) / 2, 1.0],
                                     [0.0, 0.0, b_mid, b_end], [False] * 2)
            lam = 0.8
            total = rate_reset(f, lam).value
            parts = rate_reset(g1, lam).value + rate_reset(g2, lam).value
            assert total == pytest.approx(parts, rel=1e-12, abs=1e-12)

    def test_reset_below_lambda_plus_wiener(self):
        rng = np.random.default_rng(6)
        lam = 1.1
        for _ in range(100):
            p = random_admissible_path(rng)
            if np.any(p.jump_flags):
                continue
            assert rate_reset(p, lam).value <= \
                lam + rate_wiener(p).value + 1e-12
