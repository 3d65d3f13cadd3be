import math

import numpy as np
import pytest

from circlelab.circlemap import AnalyticCircleMap, ArnoldFamily, conjugate_project, rotation
from circlelab.contfrac import ContinuedFraction
from circlelab.errors import PeriodicOrbitDetected, TargetUnreachable
from circlelab.rotation import (closest_returns, eq_rot_check,
                                quotients_from_returns, rho_interval,
                                rotation_number_birkhoff,
                                rotation_number_closest_return, tune_parameter)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@pytest.mark.parametrize("alpha", [GOLDEN, 0.1234567891, 0.718281828])
def test_rotation_number_of_rotation_is_alpha(alpha):
    f = rotation(alpha)
    assert rotation_number_birkhoff(f, 0.3, 997).value == pytest.approx(alpha, abs=1e-12)
    est = rotation_number_closest_return(f, 0.0, depth=20, n_max=400000)
    assert est.value == pytest.approx(alpha, abs=est.error_bound)


def test_birkhoff_error_bound_consistency():
    f = ArnoldFamily(0.3).map_at(0.61)
    e1 = rotation_number_birkhoff(f, 0.0, 500)
    e2 = rotation_number_birkhoff(f, 0.0, 1000)
    assert abs(e1.value - e2.value) <= e1.error_bound + e2.error_bound


def test_golden_rotation_returns_are_fibonacci():
    rets = closest_returns(rotation(GOLDEN), 0.0, 60)
    assert [r.q for r in rets] == [1, 2, 3, 5, 8, 13, 21, 34, 55]
    assert quotients_from_returns(rets) == [1] * 9
    signs = [math.copysign(1, r.err) for r in rets]
    assert all(s1 * s2 < 0 for s1, s2 in zip(signs, signs[1:]))


def test_sqrt2_returns_give_twos():
    rets = closest_returns(rotation(math.sqrt(2.0) - 1.0), 0.0, 200)
    assert [r.q for r in rets] == [1, 2, 5, 12, 29, 70, 169]
    assert quotients_from_returns(rets) == [2] * 6


def test_arnold_fixed_point_detected():
    with pytest.raises(PeriodicOrbitDetected) as exc:
        rotation_number_closest_return(ArnoldFamily(0.5).map_at(0.0), 0.0, 8, 1000)
    assert exc.value.q == 1 and exc.value.p == 0


def test_tongue_interior_detected():
    # inside the 0/1 tongue: a slightly above 0 with strong coupling; the
    # burnt-in base point sits on the attracting cycle
    f = ArnoldFamily(0.9).map_at(0.02)
    with pytest.raises(PeriodicOrbitDetected) as exc:
        rotation_number_closest_return(f, 0.1, 8, 5000, burn_in=500)
    assert exc.value.p == 0 and exc.value.q == 1


def test_tuned_map_extracts_target_quotients():
    a, est = tune_parameter(ArnoldFamily(0.3), ContinuedFraction.golden(), tol=1e-10)
    f = ArnoldFamily(0.3).map_at(a)
    got = rotation_number_closest_return(f, 0.0, depth=8, n_max=100000)
    assert got.extracted_quotients[:8] == (1,) * 8
    assert abs(est.value - GOLDEN) <= 1e-10
    # the two estimators agree within their combined bounds
    b = rotation_number_birkhoff(f, 0.0, 2000)
    assert abs(b.value - got.value) <= b.error_bound + got.error_bound


def test_tune_b_zero_returns_target():
    a, _ = tune_parameter(ArnoldFamily(0.0), ContinuedFraction.golden(), tol=1e-10)
    assert a == pytest.approx(GOLDEN, abs=1e-10)


def test_tune_rejects_rational_target():
    with pytest.raises(ValueError):
        tune_parameter(ArnoldFamily(0.3), ContinuedFraction([2]), tol=1e-8)


def test_tune_unreachable_target():
    fam = ArnoldFamily(0.0)
    # displacement bound is 0, so a target can't sit outside a +/- pad window
    # of itself; fake unreachability via an alien family wrapper
    class Shifted:
        def map_at(self, a):
            return rotation(a * 0.0 + 0.9)  # constant rotation number

        def displacement_bound(self):
            return 0.0

    with pytest.raises(TargetUnreachable):
        tune_parameter(Shifted(), ContinuedFraction.golden(), tol=1e-8)


def test_monotone_in_parameter():
    fam = ArnoldFamily(0.3)
    vals = []
    for a in np.linspace(0.05, 0.95, 7):
        try:
            est = rho_interval(fam.map_at(a), 1e-6, stall_factor=64)
            vals.append(est.value)
        except PeriodicOrbitDetected as po:
            vals.append((po.p / po.q) % 1.0)
    assert all(v2 >= v1 - 1e-6 for v1, v2 in zip(vals, vals[1:]))


def test_x0_independence_within_bounds():
    f = ArnoldFamily(0.3).map_at(0.61)
    ests = [rotation_number_closest_return(f, x0, depth=10, n_max=200000)
            for x0 in (0.0, 0.31, 0.77)]
    for e1 in ests:
        for e2 in ests:
            assert abs(e1.value - e2.value) <= e1.error_bound + e2.error_bound


def test_conjugation_invariance_of_rotation_number():
    f = ArnoldFamily(0.2).map_at(0.61)
    h = AnalyticCircleMap(0.0, np.array([0.015 + 0.01j]))
    g = conjugate_project(h, f, 16).map
    ef = rho_interval(f, 1e-8, stall_factor=64)
    eg = rho_interval(g, 1e-8, stall_factor=64)
    # conjugation changes the map but not the rotation number; the projected
    # conjugate carries a small spectral tail, so allow it in the bound
    assert abs(ef.value - eg.value) <= ef.error_bound + eg.error_bound + 1e-7


def test_eq_rot_residual_rotation_zero():
    assert eq_rot_check(rotation(GOLDEN), 144) < 1e-12


def test_eq_rot_residual_small_at_denominator_times():
    a, _ = tune_parameter(ArnoldFamily(0.3), ContinuedFraction.golden(), tol=1e-10)
    f = ArnoldFamily(0.3).map_at(a)
    res_q = eq_rot_check(f, 55)      # a closest-return denominator
    res_generic = eq_rot_check(f, 50)
    assert res_q < 10.0 / 55
    assert res_q < res_generic
