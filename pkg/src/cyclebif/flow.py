"""Flows of the unperturbed and perturbed systems.

Vector fields follow a components-first convention: ``f(t, x)`` accepts
``x`` of shape ``(n,)`` or ``(n, m)`` (with ``t`` a scalar or an array of
length ``m``) and returns the same shape.  Built-in systems are written
this way so that quadrature can evaluate them on whole node sets at once;
user callables that only accept ``(n,)`` still work through a slow loop.

Trajectories evaluate to ``(n,)`` for a scalar time and ``(k, n)`` for an
array of ``k`` times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

Array = np.ndarray
Field = Callable[[float, Array], Array]


class IntegrationError(RuntimeError):
    """Step-size underflow, non-finite state or step budget exhausted."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (last time reached: {t_reached:.17g})")
        self.t_reached = t_reached


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    method: str = "dopri5"
    # step used by the fixed-step method when max_step is infinite
    rk4_step: float = 1e-2
    max_steps: int = 2_000_000

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.method not in ("dopri5", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.rk4_step > 0:
            raise ValueError("rk4_step must be positive")

    def with_(self, **kw) -> "IntegratorConfig":
        return replace(self, **kw)


DEFAULT_CONFIG = IntegratorConfig()


def _fd_step(x: Array) -> float:
    return max(1e-6, 1e-7 * float(np.linalg.norm(x)))


def fd_jacobian(fun: Field, t: float, x: Array) -> Array:
    """Central-difference Jacobian of ``fun(t, .)`` at ``x``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = _fd_step(x)
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (np.asarray(fun(t, x + e)) - np.asarray(fun(t, x - e))) / (2 * h)
    return J


def eval_batch(fun: Callable, t, X: Array, *extra) -> Array:
    """Evaluate ``fun(t, X, *extra)`` on ``X`` of shape ``(n, m)``.

    Tries the vectorized call first and falls back to a column loop.
    """
    X = np.asarray(X, dtype=float)
    m = X.shape[1]
    tt = np.broadcast_to(np.asarray(t, dtype=float), (m,))
    try:
        out = np.asarray(fun(tt, X, *extra), dtype=float)
        if out.shape == X.shape:
            return out
    except Exception:
        pass
    return np.stack([np.asarray(fun(float(tt[j]), X[:, j], *extra), dtype=float)
                     for j in range(m)], axis=1)


@dataclass(frozen=True)
class OdeSystem:
    """``x' = f(t, x)`` with period ``period`` in ``t``."""

    dim: int
    f: Field
    period: float
    jac: Optional[Callable[[float, Array], Array]] = None
    autonomous: bool = False
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if not self.period > 0:
            raise ValueError("period must be positive")

    def rhs(self, t: float, x: Array) -> Array:
        return np.asarray(self.f(t, x), dtype=float)

    def jacobian(self, t: float, x: Array) -> Array:
        if self.jac is not None:
            return np.asarray(self.jac(t, x), dtype=float)
        return fd_jacobian(self.f, t, x)

    def check_invariants(self, rng: np.random.Generator, probes: int = 8,
                         scale: float = 1.0) -> dict:
        """Spot-check autonomy, periodicity and the Jacobian on random probes."""
        auto = per = jerr = 0.0
        for _ in range(probes):
            t = float(rng.uniform(0, self.period))
            x = rng.normal(size=self.dim) * scale
            fx = self.rhs(t, x)
            per = max(per, float(np.max(np.abs(self.rhs(t + self.period, x) - fx))))
            if self.autonomous:
                auto = max(auto, float(np.max(np.abs(self.rhs(0.0, x) - fx))))
            if self.jac is not None:
                h = 1e-5
                Jfd = np.empty((self.dim, self.dim))
                for j in range(self.dim):
                    e = np.zeros(self.dim)
                    e[j] = h
                    Jfd[:, j] = (self.rhs(t, x + e) - self.rhs(t, x - e)) / (2 * h)
                jerr = max(jerr, float(np.max(np.abs(self.jacobian(t, x) - Jfd))))
        return {"autonomy": auto, "periodicity": per, "jacobian": jerr}


@dataclass(frozen=True)
class Forcing:
    """Structured description ``g(t, x, 0) = trig(omega t) * shape(x)``."""

    omega: float
    kind: str  # "sin" or "cos"
    shape: Callable[[Array], Array]

    def factor(self, t):
        return np.sin(self.omega * t) if self.kind == "sin" else np.cos(self.omega * t)


@dataclass(frozen=True)
class PerturbedSystem:
    """``x' = f(t, x) + eps g(t, x, eps)``."""

    base: OdeSystem
    g: Callable[[float, Array, float], Array]
    g_jac: Optional[Callable[[float, Array, float], Array]] = None
    forcing: Optional[Forcing] = None
    name: str = ""
    info: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def period(self) -> float:
        return self.base.period

    def g_jacobian(self, t: float, x: Array, eps: float = 0.0) -> Array:
        if self.g_jac is not None:
            return np.asarray(self.g_jac(t, x, eps), dtype=float)
        return fd_jacobian(lambda tt, xx: self.g(tt, xx, eps), t, x)

    def at(self, eps: float) -> OdeSystem:
        """The perturbed field at a fixed ``eps`` as an :class:`OdeSystem`."""
        base, g = self.base, self.g
        if eps == 0.0:
            return replace(base, autonomous=base.autonomous)

        def f(t, x):
            return base.f(t, x) + eps * np.asarray(g(t, x, eps))

        def jac(t, x):
            return base.jacobian(t, x) + eps * self.g_jacobian(t, x, eps)

        return OdeSystem(base.dim, f, base.period, jac, False,
                         f"{base.name}[eps={eps:g}]")

    def check_periodicity(self, rng: np.random.Generator, probes: int = 8,
                          eps: float = 0.0) -> float:
        err = 0.0
        for _ in range(probes):
            t = float(rng.uniform(0, self.period))
            x = rng.normal(size=self.dim)
            a = np.asarray(self.g(t, x, eps))
            b = np.asarray(self.g(t + self.period, x, eps))
            err = max(err, float(np.max(np.abs(a - b))))
        return err


class DenseTrajectory:
    """Piecewise cubic Hermite interpolant through accepted steps.

    Nodes are stored in increasing time order whatever the direction of
    integration; ``t_start``/``t_end`` remember the direction.
    """

    def __init__(self, t: Array, x: Array, dx: Array,
                 t_start: Optional[float] = None, t_end: Optional[float] = None):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        dx = np.asarray(dx, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("need at least two nodes")
        if t[0] > t[-1]:
            t, x, dx = t[::-1], x[::-1], dx[::-1]
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly monotone")
        self.t = np.ascontiguousarray(t)
        self.x = np.ascontiguousarray(x)
        self.dx = np.ascontiguousarray(dx)
        self.t_start = float(self.t[0] if t_start is None else t_start)
        self.t_end = float(self.t[-1] if t_end is None else t_end)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def span(self) -> tuple:
        return float(self.t[0]), float(self.t[-1])

    def __len__(self) -> int:
        return self.t.size

    @property
    def endpoint(self) -> Array:
        return self.x[-1] if self.t_end >= self.t_start else self.x[0]

    def _locate(self, tq: Array):
        t = self.t
        lo, hi = t[0], t[-1]
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(tq < lo - slack) or np.any(tq > hi + slack):
            raise ValueError(f"time outside trajectory span [{lo}, {hi}]")
        tq = np.clip(tq, lo, hi)
        i = np.searchsorted(t, tq, side="right") - 1
        i = np.clip(i, 0, t.size - 2)
        h = t[i + 1] - t[i]
        s = (tq - t[i]) / h
        return i, h, s

    def __call__(self, tq):
        scalar = np.ndim(tq) == 0
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        i, h, s = self._locate(tq)
        s2, s3 = s * s, s * s * s
        h00 = 2 * s3 - 3 * s2 + 1
        h10 = s3 - 2 * s2 + s
        h01 = -2 * s3 + 3 * s2
        h11 = s3 - s2
        x, dx = self.x, self.dx
        out = (h00[:, None] * x[i] + (h10 * h)[:, None] * dx[i]
               + h01[:, None] * x[i + 1] + (h11 * h)[:, None] * dx[i + 1])
        return out[0] if scalar else out

    def derivative(self, tq):
        """Derivative of the interpolant (not a fresh field evaluation)."""
        scalar = np.ndim(tq) == 0
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        i, h, s = self._locate(tq)
        s2 = s * s
        d00 = (6 * s2 - 6 * s) / h
        d10 = 3 * s2 - 4 * s + 1
        d01 = (-6 * s2 + 6 * s) / h
        d11 = 3 * s2 - 2 * s
        x, dx = self.x, self.dx
        out = (d00[:, None] * x[i] + d10[:, None] * dx[i]
               + d01[:, None] * x[i + 1] + d11[:, None] * dx[i + 1])
        return out[0] if scalar else out

    def columns(self, sl: slice) -> "DenseTrajectory":
        """Trajectory of a slice of the state components."""
        return DenseTrajectory(self.t, self.x[:, sl], self.dx[:, sl],
                               self.t_start, self.t_end)

    @staticmethod
    def join(back: "DenseTrajectory", fwd: "DenseTrajectory") -> "DenseTrajectory":
        """Glue a trajectory ending at ``t*`` to one starting at ``t*``."""
        if abs(back.t[-1] - fwd.t[0]) > 1e-12 * max(1.0, abs(fwd.t[0])):
            raise ValueError("trajectories do not meet")
        t = np.concatenate([back.t, fwd.t[1:]])
        x = np.concatenate([back.x, fwd.x[1:]])
        dx = np.concatenate([back.dx, fwd.dx[1:]])
        return DenseTrajectory(t, x, dx)


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


def _rms(v: Array) -> float:
    return math.sqrt(float(np.dot(v, v)) / v.size)


def _dopri5(fun, t0: float, t1: float, y0: Array, cfg: IntegratorConfig):
    """Forward (t1 > t0) adaptive integration; returns node arrays."""
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    span = t1 - t0
    hmax = min(cfg.max_step, span)
    t = t0
    y = y0.copy()
    k1 = np.asarray(fun(t, y), dtype=float)
    if not np.all(np.isfinite(k1)):
        raise IntegrationError("non-finite field at initial state", t)

    sc = atol + rtol * np.abs(y)
    d0, d1 = _rms(y / sc), _rms(k1 / sc)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, hmax)
    k_probe = np.asarray(fun(t + h0, y + h0 * k1), dtype=float)
    d2 = _rms((k_probe - k1) / sc) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    h = min(100 * h0, h1, hmax)

    ts, ys, ks = [t], [y], [k1]
    a = _A
    e = np.asarray(_E)
    nsteps = 0
    rejected = False
    while t < t1:
        if nsteps >= cfg.max_steps:
            raise IntegrationError("step budget exhausted", t)
        floor = 16 * np.finfo(float).eps * max(1.0, abs(t))
        if t1 - t <= floor:
            # remaining span below time resolution: one Euler step is exact to rounding
            y = y + (t1 - t) * k1
            t = t1
            k1 = np.asarray(fun(t, y), dtype=float)
            ts.append(t)
            ys.append(y)
            ks.append(k1)
            break
        if h < floor:
            raise IntegrationError("step size underflow", t)
        last = False
        if t + h >= t1 - 1e-13 * max(1.0, abs(t1)):
            h = t1 - t
            last = True
        k2 = fun(t + _C[1] * h, y + h * (a[1][0] * k1))
        k3 = fun(t + _C[2] * h, y + h * (a[2][0] * k1 + a[2][1] * k2))
        k4 = fun(t + _C[3] * h, y + h * (a[3][0] * k1 + a[3][1] * k2 + a[3][2] * k3))
        k5 = fun(t + _C[4] * h, y + h * (a[4][0] * k1 + a[4][1] * k2 + a[4][2] * k3
                                         + a[4][3] * k4))
        k6 = fun(t + h, y + h * (a[5][0] * k1 + a[5][1] * k2 + a[5][2] * k3
                                 + a[5][3] * k4 + a[5][4] * k5))
        ynew = y + h * (a[6][0] * k1 + a[6][2] * k3 + a[6][3] * k4 + a[6][4] * k5
                        + a[6][5] * k6)
        tnew = t1 if last else t + h
        k7 = np.asarray(fun(tnew, ynew), dtype=float)
        nsteps += 1
        if not (np.all(np.isfinite(ynew)) and np.all(np.isfinite(k7))):
            h *= 0.25
            rejected = True
            continue
        err_vec = h * (e[0] * k1 + e[2] * k3 + e[3] * k4 + e[4] * k5 + e[5] * k6
                       + e[6] * k7)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        err = _rms(err_vec / sc)
        if err <= 1.0:
            t, y, k1 = tnew, ynew, k7
            ts.append(t)
            ys.append(y)
            ks.append(k1)
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if rejected:
                fac = min(fac, 1.0)
            rejected = False
            h = min(h * fac, hmax)
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
            rejected = True
    return np.array(ts), np.array(ys), np.array(ks)


def _rk4(fun, t0: float, t1: float, y0: Array, cfg: IntegratorConfig):
    hnom = cfg.max_step if math.isfinite(cfg.max_step) else cfg.rk4_step
    n = max(1, int(math.ceil((t1 - t0) / hnom - 1e-12)))
    if n > cfg.max_steps:
        raise IntegrationError("step budget exhausted", t0)
    h = (t1 - t0) / n
    ts = t0 + h * np.arange(n + 1)
    ts[-1] = t1
    ys = np.empty((n + 1, y0.size))
    ks = np.empty((n + 1, y0.size))
    y = y0.copy()
    ys[0] = y
    for i in range(n):
        t = ts[i]
        k1 = np.asarray(fun(t, y), dtype=float)
        ks[i] = k1
        k2 = fun(t + h / 2, y + h / 2 * k1)
        k3 = fun(t + h / 2, y + h / 2 * k2)
        k4 = fun(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite state", t)
        ys[i + 1] = y
    ks[n] = np.asarray(fun(ts[n], y), dtype=float)
    return ts, ys, ks


def solve(fun: Field, t0: float, t1: float, y0, cfg: IntegratorConfig = DEFAULT_CONFIG
          ) -> DenseTrajectory:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t1`` (either order)."""
    y0 = np.array(y0, dtype=float).ravel()
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")
    t0, t1 = float(t0), float(t1)
    if t0 == t1:
        k = np.asarray(fun(t0, y0), dtype=float)
        tiny = 1e-300 if t0 == 0 else abs(t0) * 1e-15
        return DenseTrajectory(np.array([t0, t0 + tiny]), np.stack([y0, y0]),
                               np.stack([k, k]), t0, t1)
    stepper = _dopri5 if cfg.method == "dopri5" else _rk4
    if t1 > t0:
        ts, ys, ks = stepper(fun, t0, t1, y0, cfg)
        return DenseTrajectory(ts, ys, ks, t0, t1)

    # backward: forward integration of the time-reversed field
    def rev(s, y):
        return -np.asarray(fun(-s, y), dtype=float)

    try:
        ss, ys, ks = stepper(rev, -t0, -t1, y0, cfg)
    except IntegrationError as err:
        raise IntegrationError("backward integration failed", -err.t_reached) from err
    return DenseTrajectory(-ss, ys, -ks, t0, t1)


def solve_span(fun: Field, y0, t_lo: float, t_hi: float, t_ref: float = 0.0,
               cfg: IntegratorConfig = DEFAULT_CONFIG) -> DenseTrajectory:
    """Trajectory through ``y(t_ref) = y0`` covering ``[t_lo, t_hi]``."""
    t_lo, t_hi = min(t_lo, t_ref), max(t_hi, t_ref)
    if t_lo == t_ref:
        return solve(fun, t_ref, t_hi, y0, cfg)
    if t_hi == t_ref:
        return solve(fun, t_ref, t_lo, y0, cfg)
    back = solve(fun, t_ref, t_lo, y0, cfg)
    fwd = solve(fun, t_ref, t_hi, y0, cfg)
    return DenseTrajectory.join(back, fwd)


def _resolve(system, eps: Optional[float]) -> OdeSystem:
    if isinstance(system, PerturbedSystem):
        if eps is None:
            raise TypeError("a PerturbedSystem needs eps")
        return system.at(eps)
    return system


def integrate(system, t0: float, t1: float, x0, cfg: IntegratorConfig = DEFAULT_CONFIG,
              eps: Optional[float] = None) -> DenseTrajectory:
    sys_ = _resolve(system, eps)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys_.dim,):
        raise ValueError(f"state must have shape ({sys_.dim},)")
    return solve(sys_.f, t0, t1, x0, cfg)


def flow_map(system, t: float, t0: float, xi, cfg: IntegratorConfig = DEFAULT_CONFIG,
             eps: Optional[float] = None) -> Array:
    """Omega(t, t0, xi): the state at ``t`` of the solution through ``(t0, xi)``."""
    if t == t0:
        return np.array(xi, dtype=float)
    return integrate(system, t0, t, xi, cfg, eps).endpoint.copy()


def poincare_map(psys: PerturbedSystem, eps: float, xi,
                 cfg: IntegratorConfig = DEFAULT_CONFIG) -> Array:
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return flow_map(psys.at(eps), psys.period, 0.0, xi, cfg)


class Augmented:
    """Layout of the co-integrated state ``[x, Y, Z, I]``.

    ``Y`` solves the variational equation, ``Z`` the adjoint one (so that
    ``Z^T = Y^{-1}``), and ``I`` accumulates ``Z^T g(t, x, 0)``.
    """

    def __init__(self, system: OdeSystem, with_Z: bool = True,
                 g: Optional[Callable] = None):
        self.system = system
        self.n = n = system.dim
        self.with_Z = with_Z or g is not None
        self.g = g
        self.sx = slice(0, n)
        self.sY = slice(n, n + n * n)
        self.sZ = slice(n + n * n, n + 2 * n * n) if self.with_Z else None
        end = n + 2 * n * n if self.with_Z else n + n * n
        self.sI = slice(end, end + n) if g is not None else None
        self.size = end + (n if g is not None else 0)

    def initial(self, x0, Y0: Optional[Array] = None) -> Array:
        n = self.n
        y = np.zeros(self.size)
        y[self.sx] = x0
        Y0 = np.eye(n) if Y0 is None else np.asarray(Y0, dtype=float)
        y[self.sY] = Y0.ravel()
        if self.with_Z:
            y[self.sZ] = np.linalg.inv(Y0).T.ravel()
        return y

    def rhs(self, t: float, y: Array) -> Array:
        n = self.n
        sysm = self.system
        x = y[self.sx]
        J = sysm.jacobian(t, x)
        out = np.empty_like(y)
        out[self.sx] = sysm.f(t, x)
        out[self.sY] = (J @ y[self.sY].reshape(n, n)).ravel()
        if self.with_Z:
            Z = y[self.sZ].reshape(n, n)
            out[self.sZ] = (-J.T @ Z).ravel()
            if self.g is not None:
                out[self.sI] = Z.T @ np.asarray(self.g(t, x, 0.0), dtype=float)
        return out

    def X(self, y: Array) -> Array:
        return y[..., self.sx]

    def Y(self, y: Array) -> Array:
        return y[..., self.sY].reshape(y.shape[:-1] + (self.n, self.n))

    def Z(self, y: Array) -> Array:
        return y[..., self.sZ].reshape(y.shape[:-1] + (self.n, self.n))

    def I(self, y: Array) -> Array:
        return y[..., self.sI]


def variational_matrix(system, t: float, t0: float, xi,
                       cfg: IntegratorConfig = DEFAULT_CONFIG,
                       eps: Optional[float] = None, return_state: bool = False):
    """Y(t) with Y(t0) = I along the solution through ``(t0, xi)``."""
    sys_ = _resolve(system, eps)
    aug = Augmented(sys_, with_Z=False)
    xi = np.asarray(xi, dtype=float)
    if t == t0:
        Y = np.eye(sys_.dim)
        return (Y, xi.copy()) if return_state else Y
    tr = solve(aug.rhs, t0, t, aug.initial(xi), cfg)
    yend = tr.endpoint
    Y = aug.Y(yend)
    return (Y, aug.X(yend).copy()) if return_state else Y


def adjoint_solve(system: OdeSystem, cycle_traj: DenseTrajectory, t: float, t0: float,
                  z0, cfg: IntegratorConfig = DEFAULT_CONFIG,
                  period: Optional[float] = None) -> Array:
    """z(t) for ``z' = -f_x(tau, x(tau))^T z`` along a stored trajectory.

    Times outside the stored span are reduced modulo ``period`` (default: the
    span length, i.e. the trajectory is taken to be one period of a cycle).
    """
    lo, hi = cycle_traj.span
    P = (hi - lo) if period is None else period

    def x_of(tau):
        if lo <= tau <= hi:
            return cycle_traj(tau)
        return cycle_traj(lo + (tau - lo) % P)

    def rhs(tau, z):
        return -system.jacobian(tau, x_of(tau)).T @ z

    z0 = np.asarray(z0, dtype=float)
    if t == t0:
        return z0.copy()
    return solve(rhs, t0, t, z0, cfg).endpoint.copy()


def forced_flow(psys: PerturbedSystem, xi, t_lo: float, t_hi: float,
                cfg: IntegratorConfig = DEFAULT_CONFIG) -> tuple:
    """Co-integrate ``[x, Y, Z, I]`` of the unperturbed flow through ``(0, xi)``.

    Returns ``(aug, traj)``; ``I(t) = int_0^t Z^T g(tau, x(tau), 0) dtau``.
    """
    aug = Augmented(psys.base, with_Z=True, g=psys.g)
    traj = solve_span(aug.rhs, aug.initial(np.asarray(xi, dtype=float)), t_lo, t_hi,
                      0.0, cfg)
    return aug, traj


def eta(psys: PerturbedSystem, s: float, xi, t: float,
        cfg: IntegratorConfig = DEFAULT_CONFIG) -> Array:
    """eta(t, s, xi) = Y(t) int_s^t Y(tau)^{-1} g(tau, Omega(tau, 0, xi), 0) dtau."""
    T = psys.period
    if not (0.0 <= s <= T):
        raise ValueError("s must lie in [0, T]")
    if t == s:
        return np.zeros(psys.dim)
    aug, tr = forced_flow(psys, xi, min(s, t, 0.0), max(s, t, 0.0), cfg)
    yt, ys = tr(t), tr(s)
    return aug.Y(yt) @ (aug.I(yt) - aug.I(ys))


def group_residual(system, xi, t0: float, t1: float, t2: float,
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    a = flow_map(system, t2, t1, flow_map(system, t1, t0, xi, cfg), cfg)
    b = flow_map(system, t2, t0, xi, cfg)
    return float(np.max(np.abs(a - b)))

