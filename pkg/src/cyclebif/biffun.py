"""Bifurcation functions attached to a cycle of the unperturbed system.

Integrals over a period use composite Gauss-Legendre panels whose edges are
the accepted steps of the dense cycle trajectory; panels are bisected until
two successive estimates agree, which takes care of kinks coming from
piecewise-smooth perturbations such as ``x^+``.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .cycles import AdjointFrame, Cycle, CycleError
from .flow import (DEFAULT_CONFIG, IntegratorConfig, OdeSystem, PerturbedSystem,
                   eval_batch, forced_flow, poincare_map, solve_span)

Array = np.ndarray

GRID_POINTS = 256
QUAD_ORDER = 8
QUAD_TOL = 1e-13
ZERO_XTOL = 1e-10
CLOSURE_TOL = 1e-8

_GX, _GW = np.polynomial.legendre.leggauss(QUAD_ORDER)


class BifError(RuntimeError):
    pass


# ---------------------------------------------------------------- quadrature

def _gl(fun: Callable, a: Array, b: Array) -> Array:
    half = 0.5 * (b - a)
    tau = (0.5 * (a + b))[:, None] + half[:, None] * _GX[None, :]
    v = np.asarray(fun(tau.ravel()), dtype=float)
    v = v.reshape((a.size, QUAD_ORDER) + v.shape[1:])
    est = np.tensordot(_GW, v, axes=(0, 1)) if v.ndim == 2 else np.einsum("j,pj...->p...", _GW, v)
    return est * half.reshape((-1,) + (1,) * (est.ndim - 1))


def panel_quad(fun: Callable, edges: Sequence[float], tol: float = QUAD_TOL,
               max_level: int = 48) -> Array:
    """Integrate ``fun`` (vectorized in ``tau``) over panels given by ``edges``.

    A panel is accepted when the sum over its halves differs from the
    whole-panel estimate by at most ``tol * (1 + |I|)``.
    """
    edges = np.asarray(edges, dtype=float)
    if edges.size < 2:
        raise ValueError("need at least one panel")
    sign = 1.0
    if edges[0] > edges[-1]:
        edges, sign = edges[::-1], -1.0
    a, b = edges[:-1], edges[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    if a.size == 0:
        v = np.asarray(fun(np.array([edges[0]])), dtype=float)
        return np.zeros(v.shape[1:])
    est = _gl(fun, a, b)
    scale = 1.0 + float(np.max(np.abs(est.sum(axis=0))))
    total = np.zeros(est.shape[1:])
    for _ in range(max_level):
        m = 0.5 * (a + b)
        left, right = _gl(fun, a, m), _gl(fun, m, b)
        fine = left + right
        err = np.abs(fine - est).reshape(a.size, -1).max(axis=1)
        ok = err <= tol * scale
        total = total + fine[ok].sum(axis=0)
        if ok.all():
            return sign * total
        bad = ~ok
        a, b = np.concatenate([a[bad], m[bad]]), np.concatenate([m[bad], b[bad]])
        est = np.concatenate([left[bad], right[bad]])
    return sign * (total + est.sum(axis=0))


class _States:
    """Lazily evaluated cycle quantities at a set of times."""

    def __init__(self, cycle: Cycle, frame: Optional[AdjointFrame], tau: Array):
        self.cycle, self.frame, self.tau = cycle, frame, tau
        self._c: Dict[str, Array] = {}

    def _get(self, key, make):
        if key not in self._c:
            self._c[key] = make()
        return self._c[key]

    @property
    def x(self):
        return self._get("x", lambda: self.cycle(self.tau))

    @property
    def xdot(self):
        return self._get("xdot", lambda: eval_batch(self.cycle.system.f, 0.0, self.x.T).T)

    def _adj(self, v0):
        return np.einsum("mij,j->mi", self.cycle.Z(self.tau), v0)

    @property
    def z_tilde(self):
        return self._get("zt", lambda: self._adj(self.frame.z0))

    @property
    def z_hat(self):
        if self.frame.z_hat0 is None:
            raise CycleError("frame unavailable", "no complementary adjoint solution")
        return self._get("zh", lambda: self._adj(self.frame.z_hat0))

    @property
    def y_hat(self):
        if self.frame.y_hat0 is None:
            raise CycleError("frame unavailable", "no complementary variational solution")
        return self._get("yh", lambda: np.einsum("mij,j->mi", self.cycle.Y(self.tau),
                                                 self.frame.y_hat0))

    def g(self, psys: PerturbedSystem, theta: float) -> Array:
        tm = np.mod(self.tau - theta, psys.period)
        return eval_batch(psys.g, tm, self.x.T, 0.0).T


class CycleQuadrature:
    """Integrals of cycle-dependent kernels over sub-intervals of ``[0, T]``.

    Kernels take a :class:`_States` object and return ``(m,)`` or ``(m, k)``
    values.  States on the unrefined full-period panels are cached, so only
    the perturbation needs re-evaluation when ``theta`` changes.
    """

    def __init__(self, cycle: Cycle, frame: Optional[AdjointFrame] = None,
                 tol: float = QUAD_TOL):
        self.cycle, self.frame, self.tol = cycle, frame, tol
        t = cycle.traj.t
        T = cycle.T
        nodes = t[(t > 0) & (t < T)]
        self.edges = np.concatenate([[0.0], nodes, [T]])
        self._cache: Dict[bytes, _States] = {}

    def states(self, tau: Array) -> _States:
        key = None
        if tau.size >= self.edges.size:
            key = (tau.size, float(tau[0]), float(tau[-1]), float(tau[tau.size // 2]))
            if key in self._cache:
                return self._cache[key]
        st = _States(self.cycle, self.frame, tau)
        if key is not None and len(self._cache) < 8:
            self._cache[key] = st
        return st

    def integral(self, kernel: Callable[[_States], Array], a: float = 0.0,
                 b: Optional[float] = None) -> Array:
        T = self.cycle.T
        b = T if b is None else b
        if a == b:
            return 0.0 * kernel(self.states(np.array([float(a)])))[0]
        if a == 0.0 and b == T:
            edges = self.edges
        else:
            lo, hi = min(a, b), max(a, b)
            k0, k1 = math.floor(lo / T), math.ceil(hi / T)
            tiles = [self.edges[:-1] + k * T for k in range(k0, k1)]
            e = np.concatenate(tiles + [[lo, hi]])
            e = np.unique(e[(e >= lo) & (e <= hi)])
            edges = e if a <= b else e[::-1]
        return panel_quad(lambda tau: kernel(self.states(tau)), edges, self.tol)


# ---------------------------------------------------------------- grids

@dataclass(frozen=True)
class ThetaGrid:
    values: Array
    period: float
    max_spacing: float

    def __post_init__(self):
        v = self.values
        if v.ndim != 1 or v.size < 2 or np.any(np.diff(v) <= 0):
            raise ValueError("grid must be strictly increasing")
        if v[0] != 0.0 or abs(v[-1] - self.period) > 1e-12 * max(1.0, self.period):
            raise ValueError("grid must cover [0, T]")


def theta_grid(T: float, points: int = GRID_POINTS) -> ThetaGrid:
    """``points`` intervals on ``[0, T]`` (``points + 1`` nodes)."""
    if points < 2:
        raise ValueError("need at least two intervals")
    v = np.linspace(0.0, T, points + 1)
    return ThetaGrid(v, float(T), float(T / points))


@dataclass(frozen=True)
class Zero:
    theta0: float
    kind: str              # "sign-change" or "tangency-suspect"
    local_slope: float

    def as_dict(self) -> dict:
        return {"theta0": self.theta0, "kind": self.kind, "local_slope": self.local_slope}


@dataclass
class BifSamples:
    grid: ThetaGrid
    values: Array
    zeros: List[Zero] = field(default_factory=list)
    label: str = "value"
    diagnostics: dict = field(default_factory=dict)

    @property
    def certified(self) -> List[float]:
        return [z.theta0 for z in self.zeros if z.kind == "sign-change"]

    def to_csv(self, path) -> None:
        vals = np.asarray(self.values)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if vals.ndim == 1:
                w.writerow(["theta", self.label])
                for t, v in zip(self.grid.values, vals):
                    w.writerow([f"{t:.17g}", f"{v:.17g}"])
            else:
                names = ["vx", "vy"] if vals.shape[1] == 2 else [f"v{i}" for i in range(vals.shape[1])]
                w.writerow(["theta"] + names)
                for t, v in zip(self.grid.values, vals):
                    w.writerow([f"{t:.17g}"] + [f"{c:.17g}" for c in v])

    def sidecar(self) -> dict:
        return {"label": self.label, "period": self.grid.period,
                "points": int(self.grid.values.size),
                "zeros": [z.as_dict() for z in self.zeros],
                "diagnostics": self.diagnostics}

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.sidecar(), fh, indent=2)


def map_grid(fun: Callable[[float], object], points: Sequence[float],
             threads: int = 1) -> list:
    """Evaluate ``fun`` on each point; results are ordered like ``points``."""
    pts = list(points)
    if threads <= 1 or len(pts) < 2:
        return [fun(p) for p in pts]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fun, pts))


def find_zeros(fun: Callable[[float], float], grid: ThetaGrid, values: Array,
               xtol: float = ZERO_XTOL, tangency_tol: Optional[float] = None) -> List[Zero]:
    """Zeros of a ``T``-periodic scalar function sampled on ``grid``.

    Sign changes between adjacent nodes are refined to ``xtol``; a local
    minimum of ``|value|`` below ``tangency_tol`` without a sign change is
    reported as ``tangency-suspect``.
    """
    th = grid.values
    v = np.asarray(values, dtype=float)
    T = grid.period
    if tangency_tol is None:
        tangency_tol = 1e-8 * (1.0 + float(np.max(np.abs(v))))
    found: List[Zero] = []
    exact = set()
    for i in range(th.size - 1):
        a, b, va, vb = th[i], th[i + 1], v[i], v[i + 1]
        if va == 0.0:
            exact.add(i)
            continue
        if va * vb < 0:
            r = brentq(fun, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps)
            found.append(Zero(float(r), "sign-change", float((vb - va) / (b - a))))
    n = th.size - 1
    for i in sorted(exact):
        prev = v[i - 1] if i > 0 else v[n - 1]
        nxt = v[i + 1]
        kind = "sign-change" if prev * nxt < 0 else "tangency-suspect"
        found.append(Zero(float(th[i]), kind, float((nxt - prev) / (th[i + 1] - th[i - 1]
                                                                        if i > 0 else 2 * (th[1] - th[0])))))
    # tangencies: local minima of |v| below tolerance with no sign change around
    vn = v[:n]
    av = np.abs(vn)
    for i in range(n):
        p, q = av[i - 1], av[(i + 1) % n]
        if i in exact or av[i] > tangency_tol or av[i] > p or av[i] > q:
            continue
        if vn[i - 1] * vn[(i + 1) % n] > 0 and vn[i] * vn[(i + 1) % n] > 0:
            found.append(Zero(float(th[i]), "tangency-suspect", 0.0))
    # fold T onto 0 and drop duplicates
    out: List[Zero] = []
    folded = [Zero(z.theta0 if z.theta0 < T - xtol * 10 else 0.0, z.kind, z.local_slope)
              for z in found]
    for z in sorted(folded, key=lambda z: (z.theta0, z.kind != "sign-change")):
        if any(abs(z.theta0 - o.theta0) <= 10 * xtol for o in out):
            continue
        out.append(z)
    out.sort(key=lambda z: z.theta0)
    if len(out) >= 2 and out[0].theta0 == 0.0 and abs(out[-1].theta0 - T) <= 10 * xtol:
        out.pop()
    return out


def sample(fun: Callable[[float], float], T: float, points: int = GRID_POINTS,
           label: str = "value", threads: int = 1, find: bool = True) -> BifSamples:
    grid = theta_grid(T, points)
    vals = np.asarray(map_grid(fun, grid.values, threads), dtype=float)
    zeros = find_zeros(fun, grid, vals) if find and vals.ndim == 1 else []
    return BifSamples(grid, vals, zeros, label)


# ---------------------------------------------------------------- Malkin / Melnikov

def _quad_for(cycle, frame, quad):
    if quad is not None:
        return quad
    return CycleQuadrature(cycle, frame)


def adjoint_integral(cycle: Cycle, frame: AdjointFrame, psys: PerturbedSystem, theta: float,
                     t: float = 0.0, quad: Optional[CycleQuadrature] = None) -> float:
    """``int_t^T <z~(tau), g(tau - theta, x~(tau), 0)> dtau`` (no sign factor)."""
    q = _quad_for(cycle, frame, quad)
    return float(q.integral(lambda st: np.einsum("mi,mi->m", st.z_tilde, st.g(psys, theta)),
                            t, cycle.T))


def complementary_integral(cycle: Cycle, frame: AdjointFrame, psys: PerturbedSystem,
                           theta: float, quad: Optional[CycleQuadrature] = None) -> float:
    """``int_0^T <z^(tau), g(tau - theta, x~(tau), 0)> dtau``."""
    q = _quad_for(cycle, frame, quad)
    return float(q.integral(lambda st: np.einsum("mi,mi->m", st.z_hat, st.g(psys, theta))))


def malkin(cycle: Cycle, frame: AdjointFrame, psys: PerturbedSystem, theta: float,
           cfg: IntegratorConfig = DEFAULT_CONFIG,
           quad: Optional[CycleQuadrature] = None) -> float:
    """Malkin bifurcation function of a simple cycle."""
    if frame.z0 is None or frame.pairing_sign == 0:
        raise BifError("frame lacks a periodic adjoint solution paired with the cycle")
    return frame.pairing_sign * adjoint_integral(cycle, frame, psys, theta, 0.0, quad)


def melnikov(cycle: Cycle, psys: PerturbedSystem, theta: float,
             cfg: IntegratorConfig = DEFAULT_CONFIG,
             quad: Optional[CycleQuadrature] = None) -> float:
    """Subharmonic Melnikov function of order 1/1 for planar systems."""
    if cycle.dim != 2:
        raise BifError("the Melnikov function is defined for planar systems")
    q = _quad_for(cycle, None, quad)

    def ker(st):
        xd, g = st.xdot, st.g(psys, theta)
        return xd[:, 0] * g[:, 1] - xd[:, 1] * g[:, 0]
    return float(q.integral(ker))


def malkin_samples(cycle, frame, psys, points: int = GRID_POINTS, threads: int = 1,
                   unsigned: bool = False) -> BifSamples:
    q = CycleQuadrature(cycle, frame)
    if unsigned:
        fun = lambda th: adjoint_integral(cycle, frame, psys, th, 0.0, q)  # noqa: E731
    else:
        fun = lambda th: malkin(cycle, frame, psys, th, quad=q)  # noqa: E731
    q.integral(lambda st: st.z_tilde[:, 0])   # warm the cache before threading
    return sample(fun, cycle.T, points, "malkin", threads)


def melnikov_samples(cycle, psys, points: int = GRID_POINTS, threads: int = 1) -> BifSamples:
    q = CycleQuadrature(cycle)
    q.integral(lambda st: st.xdot[:, 0])
    return sample(lambda th: melnikov(cycle, psys, th, quad=q), cycle.T, points,
                  "melnikov", threads)


def malkin_derivatives(fun: Callable[[float], float], theta: float, h: float = 1e-3) -> Array:
    """Central-difference estimates of ``M', M'', M'''`` (no smoothness check)."""
    f = [fun(theta + k * h) for k in (-2, -1, 0, 1, 2)]
    d1 = (f[3] - f[1]) / (2 * h)
    d2 = (f[3] - 2 * f[2] + f[1]) / h ** 2
    d3 = (f[4] - 2 * f[3] + 2 * f[1] - f[0]) / (2 * h ** 3)
    return np.array([d1, d2, d3])


# ---------------------------------------------------------------- sinusoidal forcing

@dataclass(frozen=True)
class SinusoidalDecomposition:
    M_sin: float
    M_cos: float
    k: int
    T: float
    cos_nonzero: bool

    def reconstruct(self, theta):
        a = 2 * np.pi * self.k * np.asarray(theta, dtype=float) / self.T
        return np.cos(a) * self.M_sin - np.sin(a) * self.M_cos


def sinusoidal_decomposition(cycle: Cycle, frame: AdjointFrame, k: int,
                             g_scalar: Callable, cfg: IntegratorConfig = DEFAULT_CONFIG,
                             psys: Optional[PerturbedSystem] = None,
                             cos_tol: float = 1e-6) -> SinusoidalDecomposition:
    """Coefficients of ``M(theta)`` for forcing ``(0, sin(2 pi k t/T) g(x))``.

    When ``psys`` is supplied its perturbation is checked against that form.
    """
    if cycle.dim != 2:
        raise BifError("sinusoidal decomposition needs a planar system")
    if int(k) != k or k < 1:
        raise BifError("k must be a positive integer")
    if frame.pairing_sign == 0:
        raise BifError("frame lacks a periodic adjoint solution paired with the cycle")
    T = cycle.T
    w = 2 * np.pi * k / T
    if psys is not None:
        _check_sine_form(psys, w, lambda x: np.stack([0.0 * x[0], np.asarray(g_scalar(x)) + 0.0 * x[0]]))
    q = CycleQuadrature(cycle, frame)

    def ker(st):
        gs = eval_scalar(g_scalar, st.x)
        base = st.z_tilde[:, 1] * gs
        return np.stack([base * np.sin(w * st.tau), base * np.cos(w * st.tau)], axis=1)
    ms, mc = frame.pairing_sign * q.integral(ker)
    return SinusoidalDecomposition(float(ms), float(mc), int(k), T, abs(mc) > cos_tol)


def eval_scalar(fun: Callable, X: Array) -> Array:
    """Evaluate a scalar state function on rows of ``X``."""
    try:
        v = np.asarray(fun(X.T), dtype=float)
        if v.shape == (X.shape[0],):
            return v
    except Exception:
        pass
    return np.array([float(fun(x)) for x in X])


def _check_sine_form(psys: PerturbedSystem, w: float, shape: Callable, probes: int = 12,
                     tol: float = 1e-9) -> None:
    rng = np.random.default_rng(7)
    T = psys.period
    for _ in range(probes):
        x = rng.normal(size=psys.dim) * 2
        t = rng.uniform(0, T)
        want = math.sin(w * t) * np.asarray(shape(x), dtype=float)
        got = np.asarray(psys.g(t, x, 0.0), dtype=float)
        if np.max(np.abs(got - want)) > tol * (1 + np.max(np.abs(want))):
            raise BifError("perturbation is not of the form sin(w t) g(x)")


def predicted_phases(M_sin: float, M_cos: float, T: float, k: int) -> List[float]:
    """The ``2k`` zeros of ``cos(2 pi k th/T) M_sin - sin(2 pi k th/T) M_cos`` in ``(0, T]``."""
    if M_cos == 0:
        raise BifError("phase formula inapplicable: M_cos = 0")
    base = T * math.atan(M_sin / M_cos)
    out = []
    for j in range(1, 2 * k + 1):
        th = (base + T * math.pi * j) / (2 * math.pi * k)
        r = th - T * math.floor(th / T)
        if r <= 1e-14 * T or r >= T:
            r = T
        out.append(float(r))
    return sorted(out)


# ---------------------------------------------------------------- averaging operator

@dataclass(frozen=True)
class PhiPaths:
    generic: Array
    fast: Optional[Array]
    closure: float

    @property
    def value(self) -> Array:
        return self.fast if self.fast is not None else self.generic

    @property
    def agreement(self) -> Optional[float]:
        if self.fast is None:
            return None
        return float(np.max(np.abs(self.fast - self.generic)))


def _closure(psys: PerturbedSystem, xi: Array, cfg: IntegratorConfig) -> float:
    return float(np.linalg.norm(poincare_map(psys, 0.0, xi, cfg) - xi))


def phi_generic(psys: PerturbedSystem, s: float, xi, cfg: IntegratorConfig = DEFAULT_CONFIG) -> Array:
    """``eta(T, s, xi) - eta(0, s, xi)`` from one co-integration over ``[0, T]``."""
    T = psys.period
    aug, tr = forced_flow(psys, xi, 0.0, T, cfg)
    yT, ys = tr(T), tr(s)
    return aug.Y(yT) @ (aug.I(yT) - aug.I(ys)) + aug.I(ys)


def phi_fast(psys: PerturbedSystem, s: float, xi, cfg: IntegratorConfig = DEFAULT_CONFIG) -> Array:
    """``int_{s-T}^s Y(tau)^{-1} g(tau, x(tau), 0) dtau`` (valid when ``P_0 xi = xi``)."""
    T = psys.period
    aug, tr = forced_flow(psys, xi, s - T, max(s, 0.0), cfg)
    return aug.I(tr(s)) - aug.I(tr(s - T))


def phi_paths(psys: PerturbedSystem, s: float, xi, cfg: IntegratorConfig = DEFAULT_CONFIG,
              closure_tol: float = CLOSURE_TOL) -> PhiPaths:
    T = psys.period
    if not (0.0 <= s <= T):
        raise ValueError("s must lie in [0, T]")
    xi = np.asarray(xi, dtype=float)
    gen = phi_generic(psys, s, xi, cfg)
    res = _closure(psys, xi, cfg)
    fast = phi_fast(psys, s, xi, cfg) if res <= closure_tol else None
    return PhiPaths(gen, fast, res)


def phi(psys: PerturbedSystem, s: float, xi, cfg: IntegratorConfig = DEFAULT_CONFIG,
        closure_tol: float = CLOSURE_TOL, path: str = "auto") -> Array:
    """Generalized averaging operator ``Phi^s(xi)``.

    ``path`` is ``"auto"`` (fast path when ``P_0 xi = xi``), ``"generic"``
    or ``"fast"``.
    """
    T = psys.period
    if not (0.0 <= s <= T):
        raise ValueError("s must lie in [0, T]")
    xi = np.asarray(xi, dtype=float)
    if path == "generic":
        return phi_generic(psys, s, xi, cfg)
    if path == "fast":
        return phi_fast(psys, s, xi, cfg)
    if path != "auto":
        raise ValueError(f"unknown path {path!r}")
    if _closure(psys, xi, cfg) <= closure_tol:
        return phi_fast(psys, s, xi, cfg)
    return phi_generic(psys, s, xi, cfg)


def phi_all_s(psys: PerturbedSystem, xi, s_values: Sequence[float],
              cfg: IntegratorConfig = DEFAULT_CONFIG) -> Array:
    """``Phi^s(xi)`` for many ``s`` from one integration over ``[-T, T]``.

    Only valid when ``P_0 xi = xi``; the caller checks that.
    """
    T = psys.period
    s = np.asarray(s_values, dtype=float)
    aug, tr = forced_flow(psys, xi, -T, T, cfg)
    return aug.I(tr(s)) - aug.I(tr(s - T))


@dataclass(frozen=True)
class PhiDecomposition:
    coef_xdot: float
    coef_yhat: float
    f_tilde_theta_0: float
    f_hat_theta: float
    ratio: float
    xdot: Array
    yhat: Array

    @property
    def vector(self) -> Array:
        return self.coef_xdot * self.xdot + self.coef_yhat * self.yhat


def phi_decomposition(cycle: Cycle, frame: AdjointFrame, psys: PerturbedSystem, s: float,
                      theta: float, cfg: IntegratorConfig = DEFAULT_CONFIG,
                      quad: Optional[CycleQuadrature] = None) -> PhiDecomposition:
    """Coordinates of ``Phi^s(x~(theta))`` in the basis ``(x~'(theta), y^(theta))``."""
    if cycle.dim != 2:
        raise BifError("decomposition is planar only")
    if not frame.condition_C or frame.z_hat0 is None or frame.ratio is None:
        raise CycleError("frame unavailable",
                         "decomposition needs a double multiplier +1 at the cycle")
    q = _quad_for(cycle, frame, quad)
    f0 = adjoint_integral(cycle, frame, psys, theta, 0.0, q)
    fs = adjoint_integral(cycle, frame, psys, theta, s + theta, q)
    fh = complementary_integral(cycle, frame, psys, theta, q)
    c = frame.ratio
    return PhiDecomposition(fh - c * fs, f0, f0, fh, c, cycle.deriv(float(theta)),
                            frame.y_hat(float(theta)))


# ---------------------------------------------------------------- symmetric case

@dataclass(frozen=True)
class SymmetryIntegrals:
    xi_tilde: Array
    xi_hat: Array
    y_hat_1_T: float
    x_dot_1_0: float
    xi_tilde_1_positive: bool


def symmetry_integrals(cycle: Cycle, psys: PerturbedSystem, frame: AdjointFrame,
                       cfg: IntegratorConfig = DEFAULT_CONFIG) -> SymmetryIntegrals:
    """The vectors ``xi~`` and ``xi^`` of a planar system with forcing ``sin(w t) g(x)``."""
    fc = psys.forcing
    if cycle.dim != 2:
        raise BifError("symmetry integrals are planar only")
    if fc is None or fc.kind != "sin":
        raise BifError("forcing is not of the form sin(w t) g(x)")
    w = fc.omega
    _check_sine_form(psys, w, fc.shape)
    if abs(cycle.T * w - 2 * np.pi) > 1e-9 * 2 * np.pi:
        raise BifError("cycle period differs from the forcing period 2 pi / w")
    xd0 = cycle.deriv(0.0)
    if abs(xd0[1]) > 1e-8 * np.linalg.norm(xd0) or xd0[0] == 0:
        raise BifError("cycle must be anchored where x2' = 0 and x1' != 0")
    if frame.y_hat0 is None:
        raise CycleError("frame unavailable", "no complementary variational solution")
    q = CycleQuadrature(cycle, frame)

    def shape(X):
        return eval_batch(lambda t, x: fc.shape(x), 0.0, X.T).T

    def ker_tilde(st):
        g = shape(st.x)
        p = -st.xdot[:, 1] * g[:, 0] + st.xdot[:, 0] * g[:, 1]
        return np.stack([p * np.cos(w * st.tau), p * np.sin(w * st.tau)], axis=1)

    def ker_hat(st):
        g, y = shape(st.x), st.y_hat
        p = y[:, 1] * g[:, 0] - y[:, 0] * g[:, 1]
        return np.stack([p * np.cos(w * st.tau), p * np.sin(w * st.tau)], axis=1)

    xt = 4 * q.integral(ker_tilde, 0.0, np.pi / (2 * w))
    xh = q.integral(ker_hat)
    yT = frame.y_hat(cycle.T)
    return SymmetryIntegrals(np.asarray(xt), np.asarray(xh), float(yT[0]), float(xd0[0]),
                             bool(xt[0] > 0))


# ---------------------------------------------------------------- nondegeneracy

@dataclass(frozen=True)
class NondegeneracyScan:
    min_norm: float
    argmin: tuple
    nondegenerate: bool
    nd_tol: float
    median_norm: float


def phi_nondegeneracy_scan(psys: PerturbedSystem, boundary: Array, s_grid: Sequence[float],
                           cfg: IntegratorConfig = DEFAULT_CONFIG,
                           closure_tol: float = CLOSURE_TOL, threads: int = 1,
                           rel_tol: float = 1e-4) -> NondegeneracyScan:
    """Minimum of ``|Phi^s(xi)|`` over boundary samples and ``s`` values.

    Every boundary point must be a fixed point of the unperturbed Poincare map.
    """
    B = np.atleast_2d(np.asarray(boundary, dtype=float))
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(s_grid < 0) or np.any(s_grid > psys.period):
        raise ValueError("s values must lie in [0, T]")

    def one(xi):
        res = _closure(psys, xi, cfg)
        if res > closure_tol:
            raise BifError(f"boundary point {xi.tolist()} is not fixed by P_0 "
                           f"(residual {res:.3g})")
        return np.linalg.norm(phi_all_s(psys, xi, s_grid, cfg), axis=1)

    norms = np.array(map_grid(one, list(B), threads))          # (points, s)
    i, j = np.unravel_index(int(np.argmin(norms)), norms.shape)
    med = float(np.median(norms))
    tol = rel_tol * med
    mn = float(norms[i, j])
    return NondegeneracyScan(mn, (float(s_grid[j]), B[i].tolist()), mn > tol, tol, med)
