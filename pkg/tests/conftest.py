from dataclasses import dataclass

import pytest

from cyclebif.cycles import AdjointFrame, Cycle, MonodromyData, monodromy, periodic_adjoint
from cyclebif.flow import DEFAULT_CONFIG
from cyclebif.systems import ScenarioSpec, make_scenario


@dataclass
class Bundle:
    scn: ScenarioSpec
    cycle: Cycle
    md: MonodromyData
    frame: AdjointFrame

    @property
    def psys(self):
        return self.scn.psys


_CACHE = {}


def load(name: str, **params) -> Bundle:
    """Scenario with its cycle, monodromy and adjoint frame, built once per session."""
    key = (name, tuple(sorted(params.items())))
    if key not in _CACHE:
        scn = make_scenario(name, params)
        cyc = scn.cycle(DEFAULT_CONFIG)
        md = monodromy(scn.system, cyc, DEFAULT_CONFIG)
        _CACHE[key] = Bundle(scn, cyc, md, periodic_adjoint(scn.system, cyc, DEFAULT_CONFIG, md))
    return _CACHE[key]


@pytest.fixture(scope="session")
def scenario():
    return load
