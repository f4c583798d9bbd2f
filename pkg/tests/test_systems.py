import math

import numpy as np
import pytest

from cyclebif.systems import (SCENARIOS, ScenarioError, duffing_amplitude, gh_cubic_margin,
                              make_scenario, symmetry_residuals)


def test_catalogue():
    assert set(SCENARIOS) == {"harmonic", "linear_asym", "duffing", "greenspan_holmes",
                              "degenerate_ring", "predator_prey"}


def test_unknown_scenario_and_keys():
    with pytest.raises(ScenarioError):
        make_scenario("van_der_pol")
    with pytest.raises(ScenarioError):
        make_scenario("greenspan_holmes", {"delta": 0.02, "omega": 1.0})


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.1])
def test_gh_delta_range(delta):
    with pytest.raises(ScenarioError):
        make_scenario("greenspan_holmes", {"delta": delta})


def test_gh_closed_forms():
    scn = make_scenario("greenspan_holmes", {"delta": 0.02})
    assert np.allclose(scn.cycle_guess, [0.0, 1.0])
    assert abs(scn.T - 2 * math.pi / 0.98) < 1e-12
    assert scn.validate() < 1e-9


def test_ring_family_period():
    scn = make_scenario("degenerate_ring", {"delta": 0.0})
    assert scn.closed_form["period_of_alpha"](1.0) == 2 * math.pi
    assert abs(scn.closed_form["period_of_alpha"](1.5) - 2 * math.pi / 1.25) < 1e-15


def test_duffing_amplitude_vanishes():
    amps = [duffing_amplitude(d) for d in (0.1, 0.01, 0.001)]
    assert amps[0] > amps[1] > amps[2] > 0
    assert amps[2] < 0.06 and amps[2] < amps[1] / 2.5
    assert make_scenario("duffing", {"delta": 0.0}).cycle_guess is None


def test_gh_symmetries():
    scn = make_scenario("greenspan_holmes", {"delta": 0.02})
    res = symmetry_residuals(scn.system.f, scn.psys.forcing.shape, np.random.default_rng(1))
    assert max(res.values()) < 1e-7


def test_cubic_margin_values():
    assert abs(gh_cubic_margin(1 / 40) - 0.4852) < 1e-3
    assert abs(gh_cubic_margin(0.1) - (2 * 0.9 ** 3 - (3 * math.pi ** 2 + 8 * math.pi) * 0.1)) < 1e-12
    assert gh_cubic_margin(0.1) < 0


def test_predator_prey_defaults_marked():
    scn = make_scenario("predator_prey")
    assert abs(scn.T - 19.313511771204016) < 1e-6
    assert scn.closed_form["k"] == 1
