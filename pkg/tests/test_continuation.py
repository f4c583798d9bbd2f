import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclebif import continuation as ct
from cyclebif.degree import SampledCurve
from cyclebif.flow import PerturbedSystem


def _zero(psys):
    n = psys.dim
    return PerturbedSystem(psys.base, lambda t, x, e: np.zeros(n),
                           lambda t, x, e: np.zeros((n, n)), None, "zero")


def _ring(radius, count=512):
    def samples(n=count):
        t = np.linspace(0, 2 * math.pi, n, endpoint=False)
        return radius * np.column_stack([np.sin(t), np.cos(t)])
    return SimpleNamespace(samples=samples)


# ---- shooting

def test_shoot_finds_equilibrium(scenario):
    b = scenario("predator_prey")
    eq = b.scn.closed_form["equilibrium"]
    sol = ct.shoot(b.psys, 0.0, eq + np.array([0.05, -0.05]))
    assert np.allclose(sol.x0, eq, atol=1e-8)
    assert sol.residual <= ct.SHOOT_TOL


def test_shoot_argument_checks(scenario):
    b = scenario("harmonic")
    with pytest.raises(ValueError):
        ct.shoot(b.psys, -1e-3, [0.0, 1.0])
    with pytest.raises(ValueError):
        ct.shoot(b.psys, 1e-3, [float("nan"), 1.0])


def test_shoot_on_unit_multiplier_is_ill_conditioned(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    with pytest.raises(ct.ShootError):
        ct.shoot(b.psys, 0.0, b.cycle(0.3) + 1e-3)


def test_bordered_at_zero_returns_cycle_point(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    sol = ct.bordered_shoot(b.psys, 0.0, b.cycle, 0.7)
    assert np.allclose(sol.x0, b.cycle(sol.phase), atol=1e-8)
    assert sol.residual <= ct.SHOOT_TOL


def test_first_order_guess_is_orthogonal(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    x = ct.first_order_guess(b.psys, b.cycle, 1.0, 1e-2)
    d = x - b.cycle(1.0)
    assert abs(d @ b.cycle.deriv(1.0)) < 1e-12
    assert 0 < np.linalg.norm(d) < 0.1


def test_duffing_two_solutions_on_opposite_sides(scenario):
    b = scenario("duffing", delta=0.05)
    q = ct.bf.CycleQuadrature(b.cycle, b.frame)
    zeros = ct._f_tilde_zeros(b.cycle, b.frame, b.psys, 64, q).certified
    assert len(zeros) == 2
    sides = set()
    for th in zeros:
        sol = ct.bordered_shoot(b.psys, 1e-4, b.cycle, th)
        assert abs((sol.phase - th + b.cycle.T / 2) % b.cycle.T - b.cycle.T / 2) < 1e-3
        sides.add(ct.classify_side(sol, b.cycle).side)
    assert sides == {"inside", "outside"}


# ---- geometry

def test_classify_side(scenario):
    b = scenario("harmonic")
    inner = ct.classify_side(_ring(0.9), b.cycle)
    outer = ct.classify_side(_ring(1.1), b.cycle)
    assert inner.side == "inside" and outer.side == "outside"
    assert abs(inner.margin - 0.1) < 1e-6 and abs(outer.margin - 0.1) < 1e-6
    on = ct.classify_side(_ring(1.0), b.cycle)
    assert on.indeterminate


def test_phase_estimate(scenario):
    b = scenario("harmonic")
    th, d = ct.phase_estimate(1.2 * b.cycle(2.0), b.cycle)
    assert abs(th - 2.0) < 1e-8 and abs(d - 0.2) < 1e-10


def test_first_exit(scenario):
    b = scenario("harmonic")
    cross = ct.first_exit(b.cycle, SampledCurve.circle(1.0, center=(1.0, 0.0), count=1024))
    assert abs(cross.theta - math.pi / 6) < 1e-3 and not cross.touches_only
    miss = ct.first_exit(b.cycle, SampledCurve.circle(0.5, center=(3.0, 0.0)))
    assert miss.theta is None and not miss.touches_only


# ---- sweeps and rates

def test_rate_fit_synthetic():
    e = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4]
    assert abs(ct.rate_fit(e, [3 * v for v in e]).slope - 1.0) < 1e-12
    assert abs(ct.rate_fit(e, [v * v for v in e]).slope - 2.0) < 1e-12
    with pytest.raises(ValueError):
        ct.rate_fit(e, [0.0] * 5)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(1e-3, 1e3))
def test_rate_fit_power_law(p, c):
    e = np.geomspace(1e-2, 1e-4, 6)
    fit = ct.rate_fit(e, c * e ** p)
    assert abs(fit.slope - p) < 1e-9 and fit.r2 > 1 - 1e-12


def test_sweep_with_zero_forcing(scenario):
    b = scenario("greenspan_holmes", delta=0.02)
    rec = ct.epsilon_sweep(_zero(b.psys), b.cycle, 0.5, [1e-2, 1e-3])
    assert max(rec.dist) < 1e-9
    with pytest.raises(ValueError):
        ct.epsilon_sweep(b.psys, b.cycle, 0.5, [1e-3, 1e-2])


def test_sweep_csv(scenario, tmp_path):
    b = scenario("greenspan_holmes", delta=0.02)
    rec = ct.epsilon_sweep(b.psys, b.cycle, 0.0, [1e-2, 3e-3])
    p = tmp_path / "s.csv"
    rec.to_csv(p)
    rows = p.read_text().splitlines()
    assert rows[0] == "eps,dist,phase,side" and len(rows) == 3
    assert float(rows[1].split(",")[1]) == rec.dist[0]
    assert rec.side == ["inside", "inside"]


# ---- transversal quantities

def test_perp_transport(scenario):
    b = scenario("predator_prey")
    assert ct.perp_transport_residual(b.frame, 3.0) < 1e-8


def test_two_sided_ring(scenario):
    b = scenario("degenerate_ring")
    q = ct.bf.CycleQuadrature(b.cycle, b.frame)
    phases = ct._f_tilde_zeros(b.cycle, b.frame, b.psys, 64, q).certified
    assert np.allclose(phases, [math.pi / 2, 3 * math.pi / 2], atol=1e-9)
    res = ct.two_sided_search(b.psys, 1e-2, b.cycle, phases)
    assert res.found
    assert np.max(np.linalg.norm(res.inside.samples(256), axis=1)) < 1
    assert np.min(np.linalg.norm(res.outside.samples(256), axis=1)) > 1
    assert abs(res.inside.T - 2 * math.pi) < 1e-12


# ---- predictions

def test_predict_gh_small_delta(scenario):
    b = scenario("greenspan_holmes", delta=1 / 40)
    rep = ct.predict(b.psys, b.cycle, b.frame, scenario=b.scn, points=64)
    prop = rep.entry("Proposition 2.1")
    assert prop.passed
    assert abs(prop.hypotheses[0].margin - 0.48518) < 1e-4
    assert rep.entry("Theorem 2.5").passed


def test_predict_gh_large_delta(scenario):
    b = scenario("greenspan_holmes", delta=0.1)
    rep = ct.predict(b.psys, b.cycle, b.frame, scenario=b.scn, points=64)
    prop = rep.entry("Proposition 2.1")
    assert not prop.passed and prop.conclusion is None
    assert prop.hypotheses[0].margin < 0
