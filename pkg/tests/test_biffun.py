import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from cyclebif import biffun as bf
from cyclebif.flow import PerturbedSystem

PROPS = settings(max_examples=15, deadline=None,
                 suppress_health_check=[HealthCheck.too_slow,
                                        HealthCheck.function_scoped_fixture])


def _zero(psys):
    n = psys.dim
    return PerturbedSystem(psys.base, lambda t, x, e: np.zeros(n),
                           lambda t, x, e: np.zeros((n, n)), None, "zero")


# ---- quadrature and zero finding

def test_panel_quad_basic():
    f = lambda t: np.sin(t)  # noqa: E731
    assert abs(bf.panel_quad(f, np.linspace(0, math.pi, 5)) - 2.0) < 1e-13
    assert abs(bf.panel_quad(f, np.linspace(math.pi, 0, 5)) + 2.0) < 1e-13
    kink = bf.panel_quad(lambda t: np.abs(t - 1.0), [0.0, 0.7, 2.0])
    assert abs(kink - 1.0) < 1e-12


def test_find_zeros_kinds():
    T = 2 * math.pi
    s = bf.sample(np.sin, T, 64)
    assert np.allclose(s.certified, [0.0, math.pi], atol=1e-10)
    t = bf.sample(lambda x: np.sin(x) ** 2 - 1e-3, T, 64)
    assert len(t.certified) == 4
    u = bf.sample(lambda x: np.sin(x) ** 2, T, 64)
    assert all(z.kind == "tangency-suspect" for z in u.zeros)
    assert len(u.zeros) == 2


def test_csv_precision(tmp_path):
    s = bf.sample(np.cos, 1.0, 4, "value")
    p = tmp_path / "v.csv"
    s.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "theta,value"
    assert float(lines[2].split(",")[1]) == math.cos(0.25)


def test_predicted_phases_synthetic():
    T, k = 5.0, 3
    ph = bf.predicted_phases(0.7, -1.3, T, k)
    assert len(ph) == 2 * k and all(0 < p <= T for p in ph)
    d = bf.SinusoidalDecomposition(0.7, -1.3, k, T, True)
    assert np.max(np.abs(d.reconstruct(np.array(ph)))) < 1e-12
    with pytest.raises(bf.BifError):
        bf.predicted_phases(1.0, 0.0, T, k)


# ---- averaging operator

def test_phi_closed_form_linear(scenario):
    b = scenario("linear_asym", mu=1.0, nu=0.0)
    closed = b.scn.closed_form["phi"]
    s = np.array([0.0, 1.7, 4.0])
    for th in (0.3, 2.0, 5.1):
        v = bf.phi_all_s(b.psys, b.cycle(th), s)
        assert np.max(np.abs(v - closed(th))) < 1e-6


def test_phi_paths_agree(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    p = bf.phi_paths(b.psys, 1.3, b.cycle(0.4))
    assert p.agreement < 1e-7
    assert p.closure < 1e-9


def test_phi_zero_forcing(scenario):
    b = scenario("harmonic")
    v = bf.phi(_zero(b.psys), 2.0, b.cycle(1.0))
    assert np.all(v == 0)


def test_nondegeneracy_scan_needs_fixed_points(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    with pytest.raises(bf.BifError):
        bf.phi_nondegeneracy_scan(b.psys, np.array([[0.0, 1.3]]), [0.0, 1.0])


def test_decomposition_matches_phi(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    for s, th in ((0.0, 0.0), (1.1, 2.3), (4.0, 5.5)):
        d = bf.phi_decomposition(b.cycle, b.frame, b.psys, s, th)
        ref = bf.phi(b.psys, s, b.cycle(th))
        assert np.max(np.abs(d.vector - ref)) < 1e-7


# ---- symmetric example integrals

def test_gh_symmetry_integrals(scenario):
    d = 0.02
    b = scenario("greenspan_holmes", delta=d)
    si = bf.symmetry_integrals(b.cycle, b.psys, b.frame)
    w = 1 - d
    assert np.allclose(si.xi_tilde, [math.pi, 2.0], atol=1e-8)
    assert np.allclose(si.xi_hat, [2 * d * math.pi ** 2 / w ** 3, -math.pi / w ** 3], atol=1e-8)
    assert abs(si.y_hat_1_T + 4 * math.pi * d / w ** 2) < 1e-8
    assert abs(si.x_dot_1_0 - w) < 1e-10


def test_gh_melnikov_zeros(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    s = bf.melnikov_samples(b.cycle, b.psys, 64)
    assert np.allclose(s.certified, [0.0, math.pi / 0.98], atol=1e-8)


# ---- Malkin function on a simple cycle

def test_malkin_against_phi(scenario):
    b = scenario("predator_prey")
    c, fr = b.cycle, b.frame
    for th in np.linspace(0, c.T, 5, endpoint=False):
        m = bf.malkin(c, fr, b.psys, th)
        via = fr.pairing_sign * (bf.phi(b.psys, c.T, c(th)) @ fr.z_tilde(th))
        assert abs(m - via) < 1e-7 * (1 + abs(m))


def test_malkin_needs_simple_cycle(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    with pytest.raises(bf.BifError):
        bf.malkin(b.cycle, b.frame, b.psys, 0.3)


def test_sine_phases_are_malkin_zeros(scenario):
    b = scenario("predator_prey")
    sd = bf.sinusoidal_decomposition(b.cycle, b.frame, 1, b.scn.closed_form["g_scalar"],
                                     psys=b.psys)
    ph = bf.predicted_phases(sd.M_sin, sd.M_cos, b.cycle.T, 1)
    zs = bf.malkin_samples(b.cycle, b.frame, b.psys, 64).certified
    assert np.allclose(sorted(ph), sorted(zs), atol=1e-6)
    for p in ph:
        assert abs(bf.malkin(b.cycle, b.frame, b.psys, p)) < 1e-6


@PROPS
@given(st.floats(0, 20), st.integers(-2, 2))
def test_theta_periodicity(scenario, th, k):
    b = scenario("predator_prey")
    c, fr, ps = b.cycle, b.frame, b.psys
    q = bf.CycleQuadrature(c, fr)
    for fun in (lambda t: bf.malkin(c, fr, ps, t, quad=q),
                lambda t: bf.melnikov(c, ps, t, quad=q)):
        a, z = fun(th), fun(th + k * c.T)
        assert abs(a - z) <= 1e-9 * (1 + abs(a))


@PROPS
@given(st.floats(0, 7))
def test_theta_periodicity_double_multiplier(scenario, th):
    b = scenario("greenspan_holmes", delta=0.02)
    c, fr, ps = b.cycle, b.frame, b.psys
    for fun in (lambda t: bf.adjoint_integral(c, fr, ps, t),
                lambda t: bf.complementary_integral(c, fr, ps, t)):
        assert abs(fun(th) - fun(th + c.T)) < 1e-9


@PROPS
@given(st.floats(0.1, 10) | st.floats(-10, -0.1))
def test_adjoint_rescaling(scenario, c):
    b = scenario("predator_prey")
    fr2 = b.frame.scaled(c)
    for th in (0.5, 7.0, 15.0):
        m1 = bf.malkin(b.cycle, b.frame, b.psys, th)
        m2 = bf.malkin(b.cycle, fr2, b.psys, th)
        assert abs(m2 - abs(c) * m1) <= 1e-9 * (1 + abs(m2))


def test_rescaling_keeps_zeros(scenario):
    b = scenario("predator_prey")
    z1 = bf.malkin_samples(b.cycle, b.frame, b.psys, 64).certified
    z2 = bf.malkin_samples(b.cycle, b.frame.scaled(-3.0), b.psys, 64).certified
    assert np.allclose(z1, z2, atol=1e-9)


def test_zero_forcing_tables(scenario):
    b = scenario("predator_prey")
    s = bf.malkin_samples(b.cycle, b.frame, _zero(b.psys), 16)
    assert np.all(s.values == 0)
