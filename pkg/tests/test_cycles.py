import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from cyclebif.cycles import (Cycle, CycleError, degeneracy_report, find_cycle, is_simple_cycle,
                             monodromy_from_matrix)
from cyclebif.systems import make_scenario

PROPS = settings(max_examples=20, deadline=None,
                 suppress_health_check=[HealthCheck.too_slow,
                                        HealthCheck.function_scoped_fixture])


@pytest.mark.parametrize("name,params,period", [
    ("harmonic", {}, 2 * math.pi),
    ("greenspan_holmes", {"delta": 0.02}, 2 * math.pi / 0.98),
    ("degenerate_ring", {}, 2 * math.pi),
    ("linear_asym", {"mu": 1.0, "nu": 0.0}, 2 * math.pi),
])
def test_periods(scenario, name, params, period):
    b = scenario(name, **params)
    assert abs(b.cycle.T - period) < 1e-9
    assert b.cycle.closure() < 1e-9


def test_predator_prey_cycle_is_simple(scenario):
    b = scenario("predator_prey")
    assert b.md.unit_multiplicity == 1 and is_simple_cycle(b.md)
    assert abs(b.cycle.T - 19.313511771204016) < 1e-6
    assert b.frame.pairing_sign != 0
    assert b.frame.z_perp0 is not None


@pytest.mark.parametrize("name", ["greenspan_holmes", "degenerate_ring", "duffing"])
def test_double_unit_multiplier(scenario, name):
    b = scenario(name)
    assert b.md.unit_multiplicity == 2
    assert b.frame.condition_C
    assert np.allclose(b.frame.pairing_matrix(0.7), np.eye(2), atol=1e-7)


def test_ring_degeneracy():
    scn = make_scenario("degenerate_ring")
    rep = degeneracy_report(scn.system, scn.family, 1.0)
    assert rep.degenerate and rep.consistent
    assert rep.monodromy_deviation < 1e-7
    rep = degeneracy_report(scn.system, scn.family, 1.5)
    assert not rep.degenerate
    assert abs(rep.T_prime + 2 * math.pi * 2 * 0.5 / 1.25 ** 2) < 1e-4


def test_gh_variational_complement(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    yh = b.scn.closed_form["y_hat"]
    for t in np.linspace(0, b.cycle.T, 9):
        y = b.cycle.Y(t) @ yh(0.0)
        assert np.allclose(y, yh(t), atol=1e-7)


@PROPS
@given(st.floats(0, 20), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_perron_pairing_constant(scenario, t, a, b_, c, d):
    b = scenario("predator_prey")
    v, w = np.array([a, b_]), np.array([c, d])
    lhs = (b.cycle.Y(t) @ v) @ (b.cycle.Z(t) @ w)
    assert abs(lhs - v @ w) <= 1e-7 * (1 + abs(v @ w))


@PROPS
@given(st.floats(-5, 25))
def test_transversal_transport(scenario, t):
    b = scenario("predator_prey")
    fr = b.frame
    lhs = fr.z_perp(t).T
    rhs = fr.D_tilde @ fr.z_perp(t + b.cycle.T).T
    assert np.max(np.abs(lhs - rhs)) <= 1e-6 * (1 + np.max(np.abs(lhs)))


def test_shifted_cycle(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    s = b.cycle.shifted(1.1)
    assert np.allclose(s(0.3), b.cycle(1.4), atol=1e-9)
    assert abs(s.T - b.cycle.T) < 1e-12


def test_json_roundtrip(scenario):
    b = scenario("harmonic")
    data = b.cycle.to_json()
    c = Cycle.from_json(b.scn.system, data)
    assert np.allclose(c(1.0), b.cycle(1.0), atol=1e-9)


def test_equilibrium_guess_is_rejected():
    scn = make_scenario("predator_prey")
    eq = scn.closed_form["equilibrium"]
    with pytest.raises(CycleError):
        find_cycle(scn.system, eq, np.array([1.0, 0.0]))


def test_multiplier_classification():
    md = monodromy_from_matrix(np.array([[1.0, 0.3], [0.0, 1.0]]))
    assert md.unit_multiplicity == 2
    md = monodromy_from_matrix(np.diag([1.0, 3.0]))
    assert md.unit_multiplicity == 1 and md.beta == 1
