import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circlelab.circlemap import (AnalyticCircleMap, ArnoldFamily,
                                 compose_project,
                                 conjugate_project, derivative, evaluate,
                                 inverse, iterate, log_derivative_variation,
                                 map_from_json, orbit_log_derivative, rotation,
                                 strip_norm)
from circlelab.errors import NotDiffeomorphism

RNG = np.random.default_rng(42)


def small_map(seed=0, degree=3, scale=0.01, c=0.4):
    rng = np.random.default_rng(seed)
    co = scale * (rng.standard_normal(degree) + 1j * rng.standard_normal(degree))
    co /= np.arange(1, degree + 1) ** 2
    return AnalyticCircleMap(c, co)


def test_pure_rotation_values():
    f = ArnoldFamily(0.0).map_at(0.3)
    assert evaluate(f, 0.2) == pytest.approx(0.5)
    assert derivative(f, 0.77, 1) == pytest.approx(1.0)


def test_arnold_derivative_closed_form():
    f = ArnoldFamily(0.5).map_at(0.0)
    x = np.linspace(0, 1, 33)
    assert np.allclose(derivative(f, x, 1), 1.0 + 0.5 * np.cos(2 * np.pi * x),
                       atol=1e-14)
    assert derivative(f, 0.5, 1) == pytest.approx(0.5)


def test_lift_equivariance():
    f = small_map(3, degree=5, scale=0.02)
    x = RNG.uniform(-2, 2, 100)
    assert np.max(np.abs(evaluate(f, x + 1) - evaluate(f, x) - 1.0)) < 1e-13


def test_not_diffeomorphism_rejected():
    with pytest.raises(NotDiffeomorphism):
        ArnoldFamily(1.0)
    with pytest.raises(NotDiffeomorphism):
        AnalyticCircleMap(0.3, np.array([0.0 - 0.5j]))  # slope hits zero


def test_iterate_rotation_displacement():
    f = rotation(0.25)
    assert iterate(f, 0.1, 8) == pytest.approx(0.1 + 2.0)


def test_orbit_log_derivative_rotation_zero():
    f = rotation((math.sqrt(5) - 1) / 2)
    for r in range(4):
        assert orbit_log_derivative(f, 0.3, 50, r) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_orbit_log_derivative_matches_differencing(order):
    # r-th output against the central first difference of the (r-1)-th
    f = ArnoldFamily(0.3).map_at(0.61)
    n, x0, h = 40, 0.37, 1e-5
    fd = (orbit_log_derivative(f, x0 + h, n, order - 1)
          - orbit_log_derivative(f, x0 - h, n, order - 1)) / (2 * h)
    got = orbit_log_derivative(f, x0, n, order)
    assert got == pytest.approx(fd, rel=1e-5)


def test_orbit_log_derivative_chain_rule_identity():
    # D ln Df^n(x) = sum over the orbit of (D ln Df)(f^i x) Df^i(x)
    f = ArnoldFamily(0.4).map_at(0.55)
    x0, n = 0.21, 25
    lhs = orbit_log_derivative(f, x0, n, 1)
    rhs = 0.0
    x = x0
    a = 1.0
    for _ in range(n):
        g1 = derivative(f, x, 2) / derivative(f, x, 1)
        rhs += g1 * a
        a *= derivative(f, x, 1)
        x = evaluate(f, x)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_inverse_round_trip_and_monotone():
    f = ArnoldFamily(0.5).map_at(0.0)
    y = RNG.uniform(-1, 2, 50)
    x = inverse(f, y)
    assert np.max(np.abs(evaluate(f, x) - y)) < 1e-13
    ys = np.sort(y)
    assert np.all(np.diff(inverse(f, ys)) >= 0)
    assert inverse(rotation(0.3), 0.7) == pytest.approx(0.4)
    assert inverse(f, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_compose_rotations_exact():
    res = compose_project(rotation(0.25), rotation(0.5), 0)
    assert res.map.mean_shift == pytest.approx(0.75, abs=1e-15)
    assert res.map.degree == 0
    assert res.tail_energy == 0.0
    assert not res.alias_warning


def test_compose_with_identity_preserves_coefficients():
    g = small_map(7, degree=4, scale=0.01)
    res = compose_project(g, rotation(0.0), 4)
    assert np.max(np.abs(res.map.coeffs - g.coeffs)) < 1e-12
    assert res.map.mean_shift == pytest.approx(g.mean_shift, abs=1e-12)


def test_rotation_compose_anything_exact():
    f = small_map(9, degree=5, scale=0.015)
    res = compose_project(rotation(0.3), f, 5)
    assert np.max(np.abs(res.map.coeffs - f.coeffs)) < 1e-13
    assert res.map.mean_shift == pytest.approx(f.mean_shift + 0.3, abs=1e-13)
    assert res.tail_energy < 1e-28


def test_conjugation_matches_pointwise_sampling():
    f = ArnoldFamily(0.3).map_at(0.61)
    h = AnalyticCircleMap(0.0, np.array([0.02 + 0.01j]))
    res = conjugate_project(h, f, 16)
    x = RNG.uniform(0, 1, 64)
    direct = evaluate(h, evaluate(f, inverse(h, x)))
    assert np.max(np.abs(evaluate(res.map, x) - direct)) < \
        10 * math.sqrt(res.tail_energy) + 1e-12


def test_alias_warning_fires_on_aggressive_truncation():
    # composing two one-harmonic maps creates higher harmonics; projecting
    # back to degree 1 discards them, which a tight tolerance must flag
    f = ArnoldFamily(0.3).map_at(0.3)
    res = compose_project(f, f, 1, alias_tol=1e-12)
    assert res.alias_warning
    assert res.tail_energy > 0


def test_strip_norm_single_mode():
    eps, nu = 1e-3, 0.2
    f = AnalyticCircleMap(0.0, np.array([eps]))
    sn = strip_norm(f, rotation(0.0), nu)
    assert sn.upper == pytest.approx(2 * eps * math.exp(2 * math.pi * nu), rel=1e-12)


def test_strip_norm_orders_and_monotonicity():
    f = small_map(11, degree=8, scale=0.005)
    g = rotation(0.4)
    at0 = strip_norm(f, g, 0.0)
    assert at0.upper >= at0.grid_sup
    prev = at0.upper
    for nu in (0.05, 0.1, 0.2):
        cur = strip_norm(f, g, nu).upper
        assert cur >= prev
        prev = cur
    # strip-boundary samples at nu=0.1 stay under the coefficient bound
    nu = 0.1
    z = RNG.uniform(0, 1, 4096) + 1j * nu
    k = np.arange(1, f.degree + 1)
    vals = (f.mean_shift - g.mean_shift
            + (np.exp(2j * np.pi * np.outer(z, k)) @ f.coeffs)
            + (np.exp(-2j * np.pi * np.outer(np.conj(z), k)) @ np.conj(f.coeffs)))
    assert strip_norm(f, g, nu).upper >= np.max(np.abs(vals)) - 1e-12


def test_variation_rotation_zero():
    assert log_derivative_variation(rotation(0.37)) == 0.0


@pytest.mark.parametrize("b", [0.1, 0.3, 0.5, 0.8])
def test_variation_arnold_closed_form(b):
    f = ArnoldFamily(b).map_at(0.2)
    ref = 2.0 * math.log((1.0 + b) / (1.0 - b))
    assert log_derivative_variation(f) == pytest.approx(ref, rel=1e-9)


def test_variation_translation_invariant():
    base = small_map(13, degree=3, scale=0.008)
    v0 = log_derivative_variation(base)
    shifted_coeffs = base.coeffs * np.exp(2j * np.pi * np.arange(1, 4) * 0.3)
    shifted = AnalyticCircleMap(base.mean_shift, shifted_coeffs)
    assert log_derivative_variation(shifted) == pytest.approx(v0, rel=1e-8)


def test_variation_at_least_grid_sum():
    f = small_map(17, degree=6, scale=0.01)
    x = np.arange(2048) / 2048.0
    vals = np.log(derivative(f, x, 1))
    grid_var = float(np.sum(np.abs(np.diff(vals))) + abs(vals[0] - vals[-1]))
    assert log_derivative_variation(f) >= grid_var - 1e-12


def test_map_json_round_trip():
    f = small_map(21, degree=3, scale=0.02, c=0.618)
    back = map_from_json(f.to_json())
    assert back.mean_shift == f.mean_shift
    assert np.array_equal(back.coeffs, f.coeffs)
    arn = map_from_json({"family": {"kind": "arnold", "a": 0.61, "b": 0.3}})
    assert arn.mean_shift == 0.61
    assert arn.degree == 1


@given(st.floats(min_value=-0.9, max_value=0.9),
       st.floats(min_value=0.0, max_value=1.0))
@settings(max_examples=50)
def test_arnold_family_always_valid(b, a):
    f = ArnoldFamily(b).map_at(a)
    assert f.df_min > 0


def test_affine_shift_family_retunes_constant_only():
    from circlelab.circlemap import AffineShiftFamily
    base = small_map(5, degree=3, scale=0.004)
    fam = AffineShiftFamily(base)
    g = fam.map_at(0.7)
    assert g.mean_shift == 0.7
    assert np.array_equal(g.coeffs, base.coeffs)
    assert fam.displacement_bound() == base.displacement_bound()
