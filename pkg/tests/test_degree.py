import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclebif.degree import (BoundaryCycle, DegreeError, SampledCurve, assemble_degree_1_60,
                             borsuk_two_zero_certificate, brouwer_degree_regular,
                             brute_force_winding, degree_1d, region_degree, winding_number)

PROPS = settings(max_examples=25, deadline=None)


def z2(p):
    x, y = p
    return np.array([x * x - y * y, 2 * x * y])


def z2_jac(p):
    x, y = p
    return np.array([[2 * x, -2 * y], [2 * y, 2 * x]])


def shifted_product(p):
    # zeros at (+-0.5, 0): z^2 - 1/4
    x, y = p
    return np.array([x * x - y * y - 0.25, 2 * x * y])


def test_known_windings():
    c = SampledCurve.circle(1.0)
    assert winding_number(lambda p: np.asarray(p), c).value == 1
    assert winding_number(z2, c).value == 2
    assert winding_number(lambda p: np.array([p[0], -p[1]]), c).value == -1
    assert winding_number(lambda p: np.array([1.0, 2.0]) + 0 * p[0], c).value == 0


def test_matches_brute_force():
    for F in (z2, shifted_product, lambda p: np.array([p[0] ** 3 - p[1], p[1] + p[0]])):
        c = SampledCurve.circle(1.0, count=64)
        fn = lambda s: np.array([math.cos(s), math.sin(s)])  # noqa: E731
        assert winding_number(F, c).value == brute_force_winding(F, fn, 2 * math.pi)


def test_reversal_flips_winding_not_degree():
    c = SampledCurve.circle(1.0)
    r = c.reversed()
    assert winding_number(z2, r).value == -2
    assert region_degree(z2, r).value == 2
    cw = SampledCurve.circle(1.0, ccw=False)
    assert cw.orientation == -1
    assert region_degree(z2, cw).value == 2


@PROPS
@given(st.floats(0.01, 100), st.floats(-math.pi, math.pi))
def test_scaling_and_rotation_invariance(k, phi):
    c = SampledCurve.circle(0.8, count=96)
    R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    base = winding_number(shifted_product, c).value
    assert winding_number(lambda p: k * (R @ shifted_product(p)), c).value == base
    assert winding_number(lambda p: -shifted_product(p), c).value == base


def test_additivity_over_disjoint_discs():
    big = SampledCurve.circle(1.0, count=128)
    left = SampledCurve.circle(0.2, center=(-0.5, 0.0), count=64)
    right = SampledCurve.circle(0.2, center=(0.5, 0.0), count=64)
    total = region_degree(shifted_product, big).value
    parts = region_degree(shifted_product, left).value + region_degree(shifted_product, right).value
    assert total == parts == 2


def test_degenerate_boundary_rejected():
    c = SampledCurve.circle(0.5, center=(0.5, 0.5))
    with pytest.raises(DegreeError):
        winding_number(shifted_product, c)


def test_regular_zero_sum():
    big = SampledCurve.circle(1.0)
    F = shifted_product
    J = lambda p: z2_jac(p)  # noqa: E731
    assert brouwer_degree_regular(F, J, [(0.5, 0.0), (-0.5, 0.0)], big) == 2
    with pytest.raises(DegreeError):
        brouwer_degree_regular(F, J, [(0.1, 0.0)])
    with pytest.raises(DegreeError):
        brouwer_degree_regular(z2, z2_jac, [(0.0, 0.0)])


def test_curve_validation():
    with pytest.raises(ValueError):
        SampledCurve(np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float))
    with pytest.raises(ValueError):
        SampledCurve(np.array([[0, 0], [1, 0]], dtype=float))
    sq = SampledCurve(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
    assert sq.contains([0.5, 0.5]) and not sq.contains([1.5, 0.5])
    assert abs(sq.distance([0.5, 2.0]) - 1.0) < 1e-15


def test_degree_1d():
    assert degree_1d(lambda t: t, -1, 1) == 1
    assert degree_1d(lambda t: -t, -1, 1) == -1
    assert degree_1d(lambda t: t * t - 0.25, -1, 1) == 0
    with pytest.raises(DegreeError):
        degree_1d(lambda t: t, 0.0, 1.0)


def test_assembly_formula():
    cycles = [BoundaryCycle(1, 0.7, 1), BoundaryCycle(2, 1.1, -1),
              BoundaryCycle(1, None, 5, touches_only=True)]
    assert assemble_degree_1_60(2, 1, cycles) == 3
    assert assemble_degree_1_60(3, 2, []) == -2
    assert assemble_degree_1_60(2, 0, [{"beta": 1, "theta_first_exit": 0.2,
                                        "degree_1d_malkin": -1}]) == -1


def _circle():
    return (lambda t: np.array([math.cos(t), math.sin(t)]),
            lambda t: np.array([-math.sin(t), math.cos(t)]))


def test_borsuk_holds_for_constant_field():
    cur, tan = _circle()
    cert = borsuk_two_zero_certificate(lambda x: np.array([1.0, 0.0]), cur, tan, tan, 2 * math.pi)
    assert cert.holds
    assert np.allclose(cert.zeros, [0.0, math.pi], atol=1e-9)
    assert cert.winding == 0 and cert.winding_in_set
    assert cert.formula_degree in (0, 2)


def test_borsuk_rejections():
    cur, tan = _circle()
    T = 2 * math.pi
    assert not borsuk_two_zero_certificate(lambda x: np.asarray(x), cur, tan, tan, T).holds
    nrm = lambda t: cur(t)  # noqa: E731
    r = borsuk_two_zero_certificate(lambda x: np.array([1.0, 0.0]), cur, tan, nrm, T)
    assert not r.holds and "transversal" in r.reason
    z3 = lambda x: np.array([x[0] ** 3 - 3 * x[0] * x[1] ** 2, 3 * x[0] ** 2 * x[1] - x[1] ** 3])  # noqa: E731
    r = borsuk_two_zero_certificate(z3, cur, tan, tan, T)
    assert not r.holds and "zeros" in r.reason


def test_borsuk_degree_two():
    cur, tan = _circle()
    cert = borsuk_two_zero_certificate(z2, cur, tan, tan, 2 * math.pi)
    assert cert.holds and cert.winding == 2 and cert.formula_degree == 2
