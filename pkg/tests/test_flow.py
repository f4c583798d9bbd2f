import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from cyclebif.flow import (DEFAULT_CONFIG, IntegratorConfig, OdeSystem, fd_jacobian, flow_map,
                           group_residual, integrate, variational_matrix)
from cyclebif.systems import make_scenario

SLOW = settings(max_examples=12, deadline=None,
                suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])

_GH = make_scenario("greenspan_holmes", {"delta": 0.02})
_PP = make_scenario("predator_prey", {})


def test_harmonic_rotation_exact():
    sys_ = make_scenario("harmonic").system
    x = flow_map(sys_, 1.3, 0.0, [0.0, 1.0])
    assert np.allclose(x, [math.sin(1.3), math.cos(1.3)], atol=1e-9)


def test_backward_integration_matches_forward():
    sys_ = _GH.system
    traj = integrate(sys_, 2.0, -1.0, [0.3, 0.9])
    assert traj.span == (-1.0, 2.0)
    back = flow_map(sys_, 2.0, -1.0, traj(-1.0))
    assert np.allclose(back, [0.3, 0.9], atol=1e-9)


def test_rk4_agrees_with_dopri():
    cfg = IntegratorConfig(method="rk4", rk4_step=1e-3)
    a = flow_map(_GH.system, 3.0, 0.0, [0.0, 1.2], cfg)
    b = flow_map(_GH.system, 3.0, 0.0, [0.0, 1.2])
    assert np.allclose(a, b, atol=1e-9)


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")


@SLOW
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(-1.2, 1.2), st.floats(-1.2, 1.2))
def test_group_property(t0, t1, t2, a, b):
    xi = np.array([a, b])
    psys = _GH.psys.at(0.05)
    assert group_residual(psys, xi, t0, t1, t2) <= 1e-8


@SLOW
@given(st.floats(-4, 4), st.floats(0.1, 5.0), st.floats(0.5, 2.0))
def test_inverse_property(t0, dt, r):
    xi = np.array([0.1, r])
    sys_ = _PP.psys.at(0.01)
    fwd = flow_map(sys_, t0 + dt, t0, xi + _PP.closed_form["equilibrium"])
    back = flow_map(sys_, t0, t0 + dt, fwd)
    assert np.allclose(back, xi + _PP.closed_form["equilibrium"], atol=1e-8)


@SLOW
@given(st.floats(0.2, 6.0), st.floats(-1.0, 1.0), st.floats(0.6, 1.4))
def test_variational_matches_finite_differences(t, a, b):
    sys_ = _GH.psys.at(0.1)
    xi = np.array([a, b])
    Y = variational_matrix(sys_, t, 0.0, xi)
    Yfd = fd_jacobian(lambda _t, x: flow_map(sys_, t, 0.0, x), 0.0, xi)
    assert np.max(np.abs(Y - Yfd)) <= 1e-5 * (1 + np.max(np.abs(Y)))


def test_variational_return_state():
    Y, x = variational_matrix(_GH.system, 1.0, 0.0, [0.0, 1.0], return_state=True)
    assert np.allclose(x, flow_map(_GH.system, 1.0, 0.0, [0.0, 1.0]), atol=1e-10)
    assert abs(np.linalg.det(Y) - 1.0) < 1e-8      # divergence-free field


@pytest.mark.parametrize("name", ["harmonic", "linear_asym", "duffing", "greenspan_holmes",
                                  "degenerate_ring", "predator_prey"])
def test_invariants_of_every_scenario(name):
    scn = make_scenario(name)
    rng = np.random.default_rng(0)
    inv = scn.system.check_invariants(rng, scale=0.8)
    assert inv["autonomy"] == 0.0
    assert inv["jacobian"] < 1e-6
    per = scn.psys.check_periodicity(rng)
    assert per < 1e-9
