"""Catalogue of example systems with analytic Jacobians and closed forms.

All vector fields accept states of shape ``(2,)`` or ``(2, m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .cycles import Cycle, find_cycle, make_cycle
from .flow import (DEFAULT_CONFIG, Forcing, IntegratorConfig, OdeSystem, PerturbedSystem,
                   solve)

Array = np.ndarray
PI = math.pi


class ScenarioError(ValueError):
    pass


def _pos(a):
    return np.maximum(a, 0.0)


def _neg(a):
    return np.maximum(-a, 0.0)


def _heav(a):
    return (np.asarray(a) > 0).astype(float)


def _stack(a, b):
    return np.stack(np.broadcast_arrays(a, b))


@dataclass
class ScenarioSpec:
    """A wired example: base system, perturbation, reference cycle data.

    ``closed_form`` holds whatever exact artifacts the example has, e.g.
    ``cycle(t)``, ``cycle_deriv(t)``, ``y_hat(t)``, ``phi(theta)``,
    ``xi_tilde``, ``xi_hat``, ``period_of_alpha(alpha)``.
    """

    name: str
    params: dict
    system: OdeSystem
    psys: PerturbedSystem
    cycle_guess: Array
    section_normal: Array
    family: Optional[Callable[[float], Array]] = None
    alpha0: Optional[float] = None
    closed_form: Dict[str, object] = field(default_factory=dict)
    _cycle: Optional[Cycle] = field(default=None, repr=False)

    @property
    def T(self) -> float:
        return self.psys.period

    def cycle(self, cfg: IntegratorConfig = DEFAULT_CONFIG) -> Cycle:
        if self._cycle is None or self._cycle.cfg != cfg:
            if self.cycle_guess is None:
                raise ScenarioError(f"{self.name}: no cycle for these parameters")
            self._cycle = find_cycle(self.system, self.cycle_guess, self.section_normal,
                                     cfg, period=self.T)
        return self._cycle

    def validate(self, samples: int = 32) -> float:
        """ODE residual of the closed-form cycle (0 if none is supplied)."""
        cyc = self.closed_form.get("cycle")
        dcyc = self.closed_form.get("cycle_deriv")
        if cyc is None or dcyc is None:
            return 0.0
        t = np.linspace(0.0, self.T, samples, endpoint=False)
        X = np.asarray(cyc(t))
        res = np.asarray(dcyc(t)) - self.system.f(0.0, X)
        return float(np.max(np.abs(res)))


def _check(params: dict, defaults: dict, name: str) -> dict:
    unknown = set(params) - set(defaults)
    if unknown:
        raise ScenarioError(f"{name}: unknown parameters {sorted(unknown)}")
    out = dict(defaults)
    out.update({k: float(v) for k, v in params.items()})
    return out


def _const_shape(vec):
    vec = np.asarray(vec, dtype=float)

    def shape(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(vec.reshape((-1,) + (1,) * (x.ndim - 1)), x.shape).copy()
    return shape


def linear_asym(mu: float = 1.0, nu: float = 0.0) -> ScenarioSpec:
    """Harmonic oscillator with piecewise-linear and cosine forcing."""

    def f(t, x):
        return _stack(x[1], -x[0])

    def jac(t, x):
        return np.array([[0.0, 1.0], [-1.0, 0.0]])

    def g(t, x, eps):
        return _stack(0.0 * x[0], mu * _pos(x[0]) + nu * _neg(x[0]) + np.cos(t))

    def g_jac(t, x, eps):
        d = mu * _heav(x[0]) - nu * _heav(-x[0])
        return np.array([[0.0, 0.0], [float(d), 0.0]])

    T = 2 * PI
    base = OdeSystem(2, f, T, jac, True, "linear_asym")
    forcing = Forcing(1.0, "cos", _const_shape([0.0, 1.0])) if mu == nu == 0 else None
    psys = PerturbedSystem(base, g, g_jac, forcing, "linear_asym")

    def phi(theta):
        s, c = np.sin(theta), np.cos(theta)
        a = 0.5 * PI * (-mu + nu - 2 * s)
        return np.stack([a * c + PI * c * s, -a * s + PI * c * c], axis=-1)

    closed = {
        "cycle": lambda t: _stack(np.sin(t), np.cos(t)),
        "cycle_deriv": lambda t: _stack(np.cos(t), -np.sin(t)),
        "y_hat": lambda t: _stack(np.sin(t), np.cos(t)),
        "phi": phi,
        "period_of_alpha": lambda a: 2 * PI,
    }
    return ScenarioSpec("linear_asym", {"mu": mu, "nu": nu}, base, psys,
                        np.array([0.0, 1.0]), np.array([1.0, 0.0]),
                        lambda a: np.array([0.0, a]), 1.0, closed)


def duffing_amplitude(delta: float, scale: float = 1.0) -> float:
    """Amplitude ``a`` of the cycle of ``u'' + u + u^3 = 0`` with period ``2 pi/(1+delta)``."""
    if delta == 0:
        return 0.0

    def period(a):
        return 4 * quad(lambda p: 1 / math.sqrt(1 + a * a * (1 + math.sin(p) ** 2) / 2),
                        0, PI / 2, epsabs=1e-14, epsrel=1e-13)[0]

    target = 2 * PI / (1 + delta)
    hi = 1.0
    while period(hi) > target:
        hi *= 2
    return brentq(lambda a: period(a) - target, 0.0, hi, xtol=1e-15, rtol=1e-15)


def duffing_period(a: float) -> float:
    return 4 * quad(lambda p: 1 / math.sqrt(1 + a * a * (1 + math.sin(p) ** 2) / 2),
                    0, PI / 2, epsabs=1e-14, epsrel=1e-13)[0]


def duffing(delta: float = 0.05, normalized: bool = False) -> ScenarioSpec:
    """``u'' + u + u^3 = eps cos((1 + delta) t)`` as a first-order system.

    With ``normalized`` the state is divided by the cycle amplitude, giving
    ``x2' = -x1 - a^2 x1^3 + eps cos((1 + delta) t)`` with a unit cycle.
    """
    if delta < 0:
        raise ScenarioError("duffing: delta must be nonnegative")
    a = duffing_amplitude(delta)
    if normalized and a == 0:
        raise ScenarioError("duffing: the normalized form needs delta > 0")
    c = a * a if normalized else 1.0

    def f(t, x):
        return _stack(x[1], -x[0] - c * x[0] ** 3)

    def jac(t, x):
        return np.array([[0.0, 1.0], [-1.0 - 3 * c * x[0] ** 2, 0.0]])

    om = 1 + delta

    def g(t, x, eps):
        return _stack(0.0 * x[0], np.cos(om * t) + 0.0 * x[0])

    def g_jac(t, x, eps):
        return np.zeros((2, 2))

    T = 2 * PI / om
    base = OdeSystem(2, f, T, jac, True, "duffing")
    psys = PerturbedSystem(base, g, g_jac, Forcing(om, "cos", _const_shape([0.0, 1.0])),
                           "duffing")
    v0 = math.sqrt(a * a + a ** 4 / 2)
    guess = None if a == 0 else np.array([0.0, v0 / a if normalized else v0])
    closed = {"amplitude": a, "period_of_amplitude": duffing_period}
    return ScenarioSpec("duffing", {"delta": delta, "normalized": normalized}, base, psys,
                        guess, np.array([1.0, 0.0]), lambda al: np.array([0.0, al]),
                        None if guess is None else float(guess[1]), closed)


def greenspan_holmes(delta: float = 0.02) -> ScenarioSpec:
    """Rotation with amplitude-dependent frequency and sine forcing."""
    if not 0 < delta < 1:
        raise ScenarioError("greenspan_holmes: delta must lie in (0, 1)")
    d = delta
    w = 1 - d

    def f(t, x):
        q = 1 - d * (x[0] ** 2 + x[1] ** 2)
        return _stack(x[1] * q, -x[0] * q)

    def jac(t, x):
        x1, x2 = x
        q = 1 - d * (x1 * x1 + x2 * x2)
        return np.array([[-2 * d * x1 * x2, q - 2 * d * x2 * x2],
                         [-q + 2 * d * x1 * x1, 2 * d * x1 * x2]])

    def g(t, x, eps):
        return _stack(0.0 * x[0], np.sin(w * t) + 0.0 * x[0])

    def g_jac(t, x, eps):
        return np.zeros((2, 2))

    T = 2 * PI / w
    base = OdeSystem(2, f, T, jac, True, "greenspan_holmes")
    shape = _const_shape([0.0, 1.0])
    psys = PerturbedSystem(base, g, g_jac, Forcing(w, "sin", shape), "greenspan_holmes")

    def y_hat(t):
        t = np.asarray(t, dtype=float)
        return _stack(-2 * d * t * np.cos(w * t) + np.sin(w * t),
                      2 * d * t * np.sin(w * t) + np.cos(w * t)) / w

    closed = {
        "cycle": lambda t: _stack(np.sin(w * np.asarray(t)), np.cos(w * np.asarray(t))),
        "cycle_deriv": lambda t: w * _stack(np.cos(w * np.asarray(t)),
                                            -np.sin(w * np.asarray(t))),
        "y_hat": y_hat,
        # evaluated from the defining integrals with g = (0, 1)
        "xi_tilde": np.array([PI, 2.0]),
        "xi_hat": np.array([2 * d * PI ** 2 / w ** 3, -PI / w ** 3]),
        "y_hat_1_T": -4 * PI * d / w ** 2,
        "x_dot_1_0": w,
        "margin_cubic": 2 * w ** 3 - (3 * PI ** 2 + 8 * PI) * d,
        "period_of_alpha": lambda a: 2 * PI / (1 - d * a * a),
        "shape": shape,
    }
    return ScenarioSpec("greenspan_holmes", {"delta": delta}, base, psys,
                        np.array([0.0, 1.0]), np.array([1.0, 0.0]),
                        lambda a: np.array([0.0, a]), 1.0, closed)


def gh_cubic_margin(delta: float) -> float:
    """``2(1-delta)^3 - (3 pi^2 + 8 pi) delta``; positive on the admissible range."""
    return 2 * (1 - delta) ** 3 - (3 * PI ** 2 + 8 * PI) * delta


def degenerate_ring(mu: float = 0.0, nu: float = 0.0, delta: float = 0.0) -> ScenarioSpec:
    """Rotation with frequency ``(r-1)^2 + 1``; the unit circle is degenerate.

    The reference cycle is the family member whose period matches the
    forcing period ``2 pi/(1 + delta)``, i.e. radius ``1 + sqrt(delta)``.
    """
    if delta < 0:
        raise ScenarioError("degenerate_ring: delta must be nonnegative")

    def f(t, x):
        r = np.sqrt(x[0] ** 2 + x[1] ** 2)
        q = (r - 1) ** 2 + 1
        return _stack(x[1] * q, -x[0] * q)

    def jac(t, x):
        x1, x2 = x
        r = math.hypot(x1, x2)
        q = (r - 1) ** 2 + 1
        k = 2 * (r - 1) / r if r > 0 else 0.0
        return np.array([[x2 * k * x1, q + x2 * k * x2],
                         [-q - x1 * k * x1, -x1 * k * x2]])

    om = 1 + delta

    def g(t, x, eps):
        return _stack(0.0 * x[0], mu * _pos(x[0]) + nu * _neg(x[0]) + np.cos(om * t))

    def g_jac(t, x, eps):
        dd = mu * _heav(x[0]) - nu * _heav(-x[0])
        return np.array([[0.0, 0.0], [float(dd), 0.0]])

    T = 2 * PI / om
    alpha = 1 + math.sqrt(delta)
    base = OdeSystem(2, f, T, jac, True, "degenerate_ring")
    forcing = Forcing(om, "cos", _const_shape([0.0, 1.0])) if mu == nu == 0 else None
    psys = PerturbedSystem(base, g, g_jac, forcing, "degenerate_ring")

    def period_of_alpha(a):
        return 2 * PI / ((a - 1) ** 2 + 1)

    closed = {
        "cycle": lambda t: alpha * _stack(np.sin(om * np.asarray(t)), np.cos(om * np.asarray(t))),
        "cycle_deriv": lambda t: alpha * om * _stack(np.cos(om * np.asarray(t)),
                                                     -np.sin(om * np.asarray(t))),
        "period_of_alpha": period_of_alpha,
        "alpha": alpha,
    }
    if delta == 0:
        closed["y_hat"] = lambda t: _stack(np.sin(t), np.cos(t))
        closed["phi"] = linear_asym(mu, nu).closed_form["phi"]
    return ScenarioSpec("degenerate_ring", {"mu": mu, "nu": nu, "delta": delta}, base, psys,
                        np.array([0.0, alpha]), np.array([1.0, 0.0]),
                        lambda a: np.array([0.0, a]), alpha, closed)


PREDATOR_PREY_DEFAULTS = dict(k0=1.0, k1=1.0, k2=1.0, k3=0.2, k4=1.0, k5=0.6, mu=1.0, nu=0.0)


def predator_prey(k0=1.0, k1=1.0, k2=1.0, k3=0.2, k4=1.0, k5=0.6, mu=1.0, nu=0.0,
                  cfg: IntegratorConfig = DEFAULT_CONFIG) -> ScenarioSpec:
    """Generalized predator-prey model with prey-dependent sine forcing.

    The default rates are not canonical: they were picked so that the
    interior equilibrium is an unstable focus surrounded by an attracting
    limit cycle (period close to 19.31).  The forcing period is set to the
    cycle period.
    """
    if min(k0, k1, k2, k4, k5) <= 0 or k3 < 0 or k4 <= k5:
        raise ScenarioError("predator_prey: rates must be positive with k4 > k5")

    def f(t, x):
        x1, x2 = x[0], x[1]
        s = x1 / (k0 + x1)
        return _stack(k1 * x1 - k2 * s * x2 - k3 * x1 * x1, k4 * s * x2 - k5 * x2)

    def jac(t, x):
        x1, x2 = x
        d = k0 / (k0 + x1) ** 2
        return np.array([[k1 - k2 * x2 * d - 2 * k3 * x1, -k2 * x1 / (k0 + x1)],
                         [k4 * x2 * d, k4 * x1 / (k0 + x1) - k5]])

    e1 = k0 * k5 / (k4 - k5)
    e2 = (k1 - k3 * e1) * (k0 + e1) / k2
    equilibrium = np.array([e1, e2])

    probe = OdeSystem(2, f, 1.0, jac, True, "predator_prey")
    start = equilibrium + np.array([0.05 * max(e1, 1.0), 0.0])
    tr = solve(f, 0.0, 600.0, start, cfg.with_(rel_tol=1e-8, abs_tol=1e-10))
    x_late = tr(600.0)
    normal = np.array([1.0, 0.0]) if abs(f(0.0, x_late)[0]) > 1e-3 else np.array([0.0, 1.0])
    cyc = find_cycle(probe, x_late, f(0.0, x_late), cfg)
    T = cyc.minimal_period
    om = 2 * PI / T

    def g(t, x, eps):
        return _stack(0.0 * x[0], (mu * _pos(x[0]) + nu * _neg(x[0])) * np.sin(om * t))

    def g_jac(t, x, eps):
        dd = (mu * _heav(x[0]) - nu * _heav(-x[0])) * math.sin(om * t)
        return np.array([[0.0, 0.0], [float(dd), 0.0]])

    def shape(x):
        x = np.asarray(x, dtype=float)
        return _stack(0.0 * x[0], mu * _pos(x[0]) + nu * _neg(x[0]))

    base = OdeSystem(2, f, T, jac, True, "predator_prey")
    psys = PerturbedSystem(base, g, g_jac, Forcing(om, "sin", shape), "predator_prey")
    params = dict(k0=k0, k1=k1, k2=k2, k3=k3, k4=k4, k5=k5, mu=mu, nu=nu)
    spec = ScenarioSpec("predator_prey", params, base, psys, cyc.x0.copy(),
                        np.asarray(f(0.0, cyc.x0)), None, None,
                        {"equilibrium": equilibrium, "k": 1,
                         "g_scalar": lambda x: mu * _pos(np.asarray(x)[0])
                         + nu * _neg(np.asarray(x)[0])})
    spec._cycle = make_cycle(base, cyc.x0, T, cfg, T)
    return spec


def harmonic() -> ScenarioSpec:
    """Unforced harmonic oscillator (all orbits 2 pi-periodic)."""
    def f(t, x):
        return _stack(x[1], -x[0])

    def jac(t, x):
        return np.array([[0.0, 1.0], [-1.0, 0.0]])

    base = OdeSystem(2, f, 2 * PI, jac, True, "harmonic")
    psys = PerturbedSystem(base, lambda t, x, e: 0.0 * np.asarray(x), lambda t, x, e: np.zeros((2, 2)),
                           None, "harmonic")
    closed = {"cycle": lambda t: _stack(np.sin(t), np.cos(t)),
              "cycle_deriv": lambda t: _stack(np.cos(t), -np.sin(t))}
    return ScenarioSpec("harmonic", {}, base, psys, np.array([0.0, 1.0]),
                        np.array([1.0, 0.0]), lambda a: np.array([0.0, a]), 1.0, closed)


_CATALOGUE = {
    "linear_asym": (linear_asym, dict(mu=1.0, nu=0.0)),
    "duffing": (duffing, dict(delta=0.05, normalized=0.0)),
    "greenspan_holmes": (greenspan_holmes, dict(delta=0.02)),
    "degenerate_ring": (degenerate_ring, dict(mu=0.0, nu=0.0, delta=0.0)),
    "predator_prey": (predator_prey, dict(PREDATOR_PREY_DEFAULTS)),
    "harmonic": (harmonic, {}),
}

SCENARIOS = tuple(_CATALOGUE)


def make_scenario(name: str, params: Optional[dict] = None) -> ScenarioSpec:
    if name not in _CATALOGUE:
        raise ScenarioError(f"unknown scenario {name!r}; choose from {list(_CATALOGUE)}")
    ctor, defaults = _CATALOGUE[name]
    p = _check(params or {}, defaults, name)
    if name == "duffing":
        p["normalized"] = bool(p["normalized"])
    spec = ctor(**p)
    res = spec.validate()
    if res > 1e-9:
        raise ScenarioError(f"{name}: closed-form cycle residual {res:.3g}")
    return spec


def symmetry_residuals(f: Callable, shape: Callable, rng: np.random.Generator,
                       probes: int = 16, h: float = 1e-6) -> Dict[str, float]:
    """Pointwise residuals of the reflection symmetries of a planar field
    and of a forcing profile (and the trace-free Jacobian condition)."""
    out = {k: 0.0 for k in ("f1_even_x1", "f2_odd_x1", "f1_odd_x2", "f2_even_x2",
                            "trace_free", "g_x2_reflect", "g_x1_reflect")}
    for _ in range(probes):
        x = rng.normal(size=2)
        fx = np.asarray(f(0.0, x))
        fa = np.asarray(f(0.0, np.array([-x[0], x[1]])))
        fb = np.asarray(f(0.0, np.array([x[0], -x[1]])))
        out["f1_even_x1"] = max(out["f1_even_x1"], abs(fx[0] - fa[0]))
        out["f2_odd_x1"] = max(out["f2_odd_x1"], abs(fx[1] + fa[1]))
        out["f1_odd_x2"] = max(out["f1_odd_x2"], abs(fx[0] + fb[0]))
        out["f2_even_x2"] = max(out["f2_even_x2"], abs(fx[1] - fb[1]))
        d11 = (f(0.0, x + [h, 0])[0] - f(0.0, x - [h, 0])[0]) / (2 * h)
        d22 = (f(0.0, x + [0, h])[1] - f(0.0, x - [0, h])[1]) / (2 * h)
        out["trace_free"] = max(out["trace_free"], abs(d11 + d22))
        gx = np.asarray(shape(x))
        gb = np.asarray(shape(np.array([x[0], -x[1]])))
        ga = np.asarray(shape(np.array([-x[0], x[1]])))
        out["g_x2_reflect"] = max(out["g_x2_reflect"], abs(gx[0] + gb[0]), abs(gx[1] - gb[1]))
        out["g_x1_reflect"] = max(out["g_x1_reflect"], abs(gx[0] + ga[0]), abs(gx[1] - ga[1]))
    return out
