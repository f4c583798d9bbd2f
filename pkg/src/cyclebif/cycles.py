"""Periodic cycles of autonomous systems, their monodromy and adjoint frames."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .flow import (Augmented, DenseTrajectory, IntegratorConfig, DEFAULT_CONFIG,
                   IntegrationError, eval_batch, OdeSystem, solve, variational_matrix)

Array = np.ndarray

UNIT_TOL = 1e-6
CLOSURE_TOL = 1e-8
PERIOD_TOL = 1e-6
SAMPLES_PER_PERIOD = 2048


class CycleError(RuntimeError):
    """Failure to locate or represent a cycle; ``kind`` names the cause."""

    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind


def dense_config(cfg: IntegratorConfig, T: float,
                 samples: int = SAMPLES_PER_PERIOD) -> IntegratorConfig:
    """Cap the step so that Hermite interpolation error is far below tolerance."""
    return cfg.with_(max_step=min(cfg.max_step, T / samples))


class Cycle:
    """A T-periodic solution with its fundamental matrices on ``[0, T]``.

    ``Y(t)`` is the variational fundamental matrix normalized at 0 and
    ``Z(t) = Y(t)^{-T}`` the adjoint one; both are extended beyond ``[0, T]``
    through ``Y(t + kT) = Y(t) Y(T)^k``.
    """

    def __init__(self, system: OdeSystem, x0: Array, T: float, minimal_period: float,
                 traj: DenseTrajectory, aug: Augmented, cfg: IntegratorConfig):
        self.system = system
        self.x0 = np.array(x0, dtype=float)
        self.T = float(T)
        self.minimal_period = float(minimal_period)
        self.traj = traj
        self.aug = aug
        self.cfg = cfg
        yT = traj(self.T)
        self.Y_T = aug.Y(yT).copy()
        self.Z_T = aug.Z(yT).copy()
        self.x_traj = traj.columns(aug.sx)

    @property
    def dim(self) -> int:
        return self.system.dim

    def _reduce(self, t):
        t = np.asarray(t, dtype=float)
        k = np.floor(t / self.T)
        r = t - k * self.T
        # guard the seam against round-off; keep (r, k) consistent
        wrap = r >= self.T
        r = np.where(wrap, r - self.T, r)
        k = np.where(wrap, k + 1, k)
        r = np.where(r < 0, 0.0, r)
        return r, k.astype(int)

    def __call__(self, t):
        r, _ = self._reduce(t)
        return self.x_traj(r)

    def deriv(self, t):
        x = self(t)
        if np.ndim(t) == 0:
            return self.system.rhs(0.0, x)
        return eval_batch(self.system.f, 0.0, x.T).T

    def closure(self) -> float:
        return float(np.linalg.norm(self.x_traj(self.T) - self.x0))

    def _fund(self, t, which: str):
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        r, k = self._reduce(tt)
        states = self.traj(r)
        M = self.aug.Y(states) if which == "Y" else self.aug.Z(states)
        base = self.Y_T if which == "Y" else self.Z_T
        out = M.copy()
        for j in np.unique(k):
            if j == 0:
                continue
            P = np.linalg.matrix_power(base if j > 0 else np.linalg.inv(base), abs(int(j)))
            sel = k == j
            out[sel] = M[sel] @ P
        return out[0] if scalar else out

    def Y(self, t):
        return self._fund(t, "Y")

    def Z(self, t):
        return self._fund(t, "Z")

    def shifted(self, theta: float, cfg: Optional[IntegratorConfig] = None) -> "Cycle":
        """The same cycle re-anchored at ``x(theta)``."""
        return make_cycle(self.system, self(float(theta)), self.T, cfg or self.cfg,
                          self.minimal_period)

    def samples(self, count: int = 256) -> Array:
        t = np.linspace(0.0, self.T, count + 1)
        return t, self(t)

    def to_json(self, sample_count: int = 256) -> dict:
        t, x = self.samples(sample_count)
        return {"x0": self.x0.tolist(), "T": self.T,
                "minimal_period": self.minimal_period,
                "sample_count": int(t.size),
                "samples": [[float(ti), *map(float, xi)] for ti, xi in zip(t, x)]}

    @staticmethod
    def from_json(system: OdeSystem, data: dict,
                  cfg: IntegratorConfig = DEFAULT_CONFIG) -> "Cycle":
        cyc = make_cycle(system, np.asarray(data["x0"], float), float(data["T"]), cfg,
                         float(data["minimal_period"]))
        samples = np.asarray(data.get("samples", []), dtype=float)
        if samples.size:
            dev = np.max(np.abs(cyc(samples[:, 0]) - samples[:, 1:]))
            if dev > 1e-6:
                raise CycleError("closure", f"stored samples deviate by {dev:.3g}")
        return cyc


def make_cycle(system: OdeSystem, x0, T: float, cfg: IntegratorConfig = DEFAULT_CONFIG,
               minimal_period: Optional[float] = None,
               closure_tol: float = CLOSURE_TOL) -> Cycle:
    """Integrate one period from ``x0`` and package it as a :class:`Cycle`."""
    if not system.autonomous:
        raise CycleError("not autonomous", "cycles are built for autonomous fields")
    aug = Augmented(system, with_Z=True)
    dcfg = dense_config(cfg, T)
    traj = solve(aug.rhs, 0.0, T, aug.initial(np.asarray(x0, dtype=float)), dcfg)
    cyc = Cycle(system, x0, T, T if minimal_period is None else minimal_period,
                traj, aug, cfg)
    res = cyc.closure()
    if res > closure_tol:
        raise CycleError("closure", f"residual {res:.3g} exceeds {closure_tol:.3g}")
    return cyc


def _section_crossings(traj: DenseTrajectory, point: Array, normal: Array,
                       direction: float, t_min: float = 0.0) -> List[float]:
    """Times at which the trajectory crosses the hyperplane in ``direction``."""
    s = (traj.x - point) @ normal
    out = []
    for i in range(1, len(traj) - 1 + 1):
        a, b = s[i - 1], s[i]
        if traj.t[i] <= t_min:
            continue
        if a * b < 0 or (b == 0 and i < len(traj) - 1 and a * s[i + 1] < 0):
            if np.sign(b - a) != np.sign(direction):
                continue
            if b == 0:
                tc = traj.t[i]
            else:
                fn = lambda tt: float((traj(tt) - point) @ normal)
                tc = brentq(fn, traj.t[i - 1], traj.t[i], xtol=1e-14, rtol=1e-15)
            if tc > t_min:
                out.append(tc)
    return out


def first_return_time(system: OdeSystem, x: Array, normal: Array, max_time: float,
                      cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """First time the orbit of ``x`` re-crosses the section through ``x``."""
    fx = system.rhs(0.0, x)
    direction = float(np.sign(fx @ normal))
    if direction == 0:
        raise CycleError("section degenerate", "field tangent to the section")
    step = min(cfg.max_step, max_time / 4000)
    traj = solve(system.f, 0.0, max_time, x, cfg.with_(max_step=step))
    # skip the departure: ignore crossings before the orbit has left the section
    s = (traj.x - x) @ normal
    away = np.nonzero(np.abs(s) > 1e-9 * max(1.0, np.linalg.norm(x)))[0]
    t_min = traj.t[away[0]] if away.size else 0.0
    hits = _section_crossings(traj, x, normal, direction, t_min)
    if not hits:
        raise CycleError("no recurrence", f"no return within {max_time:g}")
    return hits[0]


def find_cycle(system: OdeSystem, guess, section_normal, cfg: IntegratorConfig = DEFAULT_CONFIG,
               period: Optional[float] = None, max_time: Optional[float] = None,
               closure_tol: float = CLOSURE_TOL, max_iter: int = 40) -> Cycle:
    """Locate a cycle near ``guess`` by Newton's method on a section.

    With ``period=None`` the return time is free; otherwise the cycle is
    required to close after exactly ``period`` (its minimal period must
    divide it).  Steps are minimum-norm least-squares solutions, so on a
    continuum of cycles the iteration settles on the member nearest the
    guess.
    """
    x = np.array(guess, dtype=float)
    normal = np.asarray(section_normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    n = system.dim
    fx = system.rhs(0.0, x)
    if abs(fx @ normal) <= 1e-8 * np.linalg.norm(fx):
        raise CycleError("section degenerate", "section normal orthogonal to the field")
    if max_time is None:
        max_time = max(50.0, 10.0 * system.period, 3.0 * (period or 0.0))
    anchor = x.copy()

    try:
        tau = period if period is not None else first_return_time(
            system, x, normal, max_time, cfg)
    except IntegrationError as err:
        raise CycleError("no recurrence", str(err)) from err

    def residual(x, tau):
        Y, xe = variational_matrix(system, tau, 0.0, x, cfg, return_state=True)
        r = np.concatenate([xe - x, [(x - anchor) @ normal]])
        if period is None:
            J = np.zeros((n + 1, n + 1))
            J[:n, :n] = Y - np.eye(n)
            J[:n, n] = system.rhs(0.0, xe)
            J[n, :n] = normal
        else:
            J = np.zeros((n + 1, n))
            J[:n, :] = Y - np.eye(n)
            J[n, :] = normal
        return r, J

    try:
        r, J = residual(x, tau)
        for _ in range(max_iter):
            rn = np.linalg.norm(r)
            if rn <= 0.1 * closure_tol:
                break
            step, *_ = np.linalg.lstsq(J, -r, rcond=1e-12)
            if not np.all(np.isfinite(step)) or not np.any(step):
                raise CycleError("section degenerate", "singular return-map Jacobian")
            lam = 1.0
            while True:
                xn = x + lam * step[:n]
                tn = tau + lam * step[n] if period is None else tau
                rn_new, Jn = residual(xn, tn)
                if np.linalg.norm(rn_new) < rn or lam < 1e-3:
                    break
                lam *= 0.5
            if np.linalg.norm(rn_new) >= rn and lam < 1e-3:
                raise CycleError("nonconvergent", f"stalled at residual {rn:.3g}")
            x, tau, r, J = xn, tn, rn_new, Jn
        else:
            if np.linalg.norm(r) > closure_tol:
                raise CycleError("nonconvergent", f"residual {np.linalg.norm(r):.3g}")
    except IntegrationError as err:
        raise CycleError("nonconvergent", str(err)) from err

    T = float(tau)
    if period is None:
        minimal = T
    else:
        minimal = first_return_time(system, x, normal, T * 1.05 + 1e-9, cfg)
        ratio = T / minimal
        if abs(ratio - round(ratio)) > PERIOD_TOL * max(1.0, ratio):
            raise CycleError("nonconvergent",
                             f"minimal period {minimal:.9g} does not divide {T:.9g}")
    return make_cycle(system, x, T, cfg, minimal, closure_tol)


@dataclass(frozen=True)
class MonodromyData:
    Y_T: Array
    eigenvalues: Array
    multipliers: Tuple[Tuple[complex, int], ...]
    beta: int
    unit_multiplicity: int
    unit_tol: float

    def as_table(self) -> List[dict]:
        return [{"re": float(np.real(m)), "im": float(np.imag(m)),
                 "abs": float(abs(m)), "multiplicity": k} for m, k in self.multipliers]


def _unit_cluster(eigs: Array, tol: float) -> int:
    """Algebraic multiplicity of the multiplier +1.

    Eigenvalues of a defective block split like ``noise^(1/k)``, so distances
    to 1 are not a reliable test.  The elementary symmetric functions of the
    shifts ``lambda_i - 1`` of a candidate cluster are O(noise) however, and
    are compared against ``tol^((j+1)/2)``.
    """
    d = np.asarray(eigs, dtype=complex) - 1.0
    order = np.argsort(np.abs(d))
    d = d[order]
    for k in range(d.size, 0, -1):
        coeffs = np.poly(d[:k])[1:]
        ok = all(abs(c) <= tol ** ((j + 2) / 2) for j, c in enumerate(coeffs))
        if ok:
            return k
    return 0


def monodromy_from_matrix(Y_T, unit_tol: float = UNIT_TOL) -> MonodromyData:
    Y_T = np.asarray(Y_T, dtype=float)
    try:
        eigs = np.linalg.eigvals(Y_T)
    except np.linalg.LinAlgError as err:
        raise CycleError("eigen-solver failure", str(err)) from err
    m1 = _unit_cluster(eigs, unit_tol)
    order = np.argsort(np.abs(eigs - 1.0))
    rest = eigs[order[m1:]]
    beta = int(sum(1 for lam in rest
                   if abs(lam.imag) <= 1e-9 * max(1.0, abs(lam)) and lam.real > 1.0))
    groups: List[Tuple[complex, int]] = []
    if m1:
        groups.append((1.0 + 0j, m1))
    for lam in rest:
        for i, (mu, k) in enumerate(groups):
            if abs(lam - mu) <= unit_tol * max(1.0, abs(mu)):
                groups[i] = (mu, k + 1)
                break
        else:
            groups.append((complex(lam), 1))
    return MonodromyData(Y_T, eigs, tuple(groups), beta, m1, unit_tol)


def monodromy(system: OdeSystem, cycle: Cycle, cfg: IntegratorConfig = DEFAULT_CONFIG,
              unit_tol: float = UNIT_TOL) -> MonodromyData:
    return monodromy_from_matrix(cycle.Y_T, unit_tol)


def is_simple_cycle(md: MonodromyData) -> bool:
    return md.unit_multiplicity == 1


@dataclass(frozen=True)
class AdjointFrame:
    """Adjoint and variational solutions attached to a cycle.

    ``z0`` is the initial value of the periodic adjoint solution.  In two
    dimensions ``rotation`` maps original coordinates to the frame in which
    ``xdot(0)`` lies on the first axis; ``y_hat0``/``z_hat0`` are given in
    original coordinates.  ``z_perp0`` holds ``n-1`` adjoint initial values
    orthogonal to ``xdot(0)`` (simple cycles only) and ``D_tilde`` the
    matrix with ``Zp^T(t) = D_tilde Zp^T(t + T)``.
    """

    cycle: Cycle
    z0: Array
    pairing_sign: int
    condition_C: bool
    rotation: Optional[Array] = None
    y_hat0: Optional[Array] = None
    z_hat0: Optional[Array] = None
    ratio: Optional[float] = None
    z_perp0: Optional[Array] = None
    D_tilde: Optional[Array] = None

    def z_tilde(self, t):
        return self.cycle.Z(t) @ self.z0

    def y_hat(self, t):
        if self.y_hat0 is None:
            raise CycleError("frame unavailable", "no complementary variational solution")
        return self.cycle.Y(t) @ self.y_hat0

    def z_hat(self, t):
        if self.z_hat0 is None:
            raise CycleError("frame unavailable", "no complementary adjoint solution")
        return self.cycle.Z(t) @ self.z_hat0

    def z_perp(self, t):
        if self.z_perp0 is None:
            raise CycleError("frame unavailable", "cycle is not simple")
        return self.cycle.Z(t) @ self.z_perp0

    def rotated(self, v):
        """Vector(s) in rotated coordinates (last axis holds components)."""
        R = np.eye(self.cycle.dim) if self.rotation is None else self.rotation
        return np.asarray(v) @ R.T

    def scaled(self, c: float) -> "AdjointFrame":
        """Frame with the periodic adjoint multiplied by ``c``."""
        if c == 0:
            raise ValueError("scale must be nonzero")
        return replace(self, z0=self.z0 * c, pairing_sign=int(self.pairing_sign * np.sign(c)))

    def pairing_matrix(self, t: float) -> Array:
        """``(xdot, y_hat)^T (z_hat, z_tilde)`` at ``t`` (identity in theory)."""
        A = np.column_stack([self.cycle.deriv(t), self.y_hat(t)])
        B = np.column_stack([self.z_hat(t), self.z_tilde(t)])
        return A.T @ B


def _null_vector(M: Array) -> Tuple[Array, float]:
    _, s, Vt = np.linalg.svd(M)
    return Vt[-1], float(s[-1])


def periodic_adjoint(system: OdeSystem, cycle: Cycle, cfg: IntegratorConfig = DEFAULT_CONFIG,
                     md: Optional[MonodromyData] = None) -> AdjointFrame:
    md = md or monodromy(system, cycle, cfg)
    n = cycle.dim
    Y_T = cycle.Y_T
    xd = cycle.deriv(0.0)
    v, smin = _null_vector(Y_T.T - np.eye(n))
    if smin > 1e-6 * max(1.0, np.linalg.norm(Y_T)):
        raise CycleError("no periodic adjoint", f"smallest singular value {smin:.3g}")

    def sign_of(z):
        p = float(xd @ z)
        if abs(p) <= 1e-6 * np.linalg.norm(xd) * np.linalg.norm(z):
            return 0
        return int(np.sign(p))

    rotation = y_hat0 = z_hat0 = ratio = None
    condition_C = n == 2 and md.unit_multiplicity == 2
    if n == 2:
        phi = math.atan2(xd[1], xd[0])
        c, s = math.cos(phi), math.sin(phi)
        rotation = np.array([[c, s], [-s, c]])
        speed = float(np.linalg.norm(xd))
        y_hat0 = rotation.T @ np.array([0.0, 1.0 / speed])
    if condition_C:
        z_hat0 = rotation.T @ np.array([1.0 / speed, 0.0])
        z0 = rotation.T @ np.array([0.0, speed])
        zT = rotation @ (cycle.Z_T @ z_hat0)
        ratio = float(zT[1] / speed)
    else:
        p = float(xd @ v)
        z0 = v / p if sign_of(v) != 0 else v

    z_perp0 = D_tilde = None
    if md.unit_multiplicity == 1:
        _, _, Vt = np.linalg.svd(xd[None, :])
        z_perp0 = Vt[1:].T
        C = z_perp0.T @ cycle.Z_T @ z_perp0
        D_tilde = np.linalg.inv(C.T)
    return AdjointFrame(cycle, z0, sign_of(z0), condition_C, rotation, y_hat0, z_hat0,
                        ratio, z_perp0, D_tilde)


@dataclass(frozen=True)
class DegeneracyReport:
    alpha0: float
    T_prime: float
    periods: Tuple[float, float]
    degenerate: bool
    monodromy_deviation: float
    consistent: bool


def degeneracy_report(system: OdeSystem, family: Callable[[float], Array], alpha0: float,
                      cfg: IntegratorConfig = DEFAULT_CONFIG, h: float = 1e-3,
                      deg_tol: float = 1e-5, unit_tol: float = UNIT_TOL) -> DegeneracyReport:
    """Estimate ``T'(alpha0)`` for a one-parameter family of cycles.

    The verdict is cross-checked against the monodromy of the member at
    ``alpha0``: a degenerate member must have ``Y(T) = I``.
    """
    def period_at(alpha):
        x = np.asarray(family(alpha), dtype=float)
        fx = system.rhs(0.0, x)
        return find_cycle(system, x, fx, cfg).minimal_period

    Tm, Tp = period_at(alpha0 - h), period_at(alpha0 + h)
    Tprime = (Tp - Tm) / (2 * h)
    x0 = np.asarray(family(alpha0), dtype=float)
    cyc = find_cycle(system, x0, system.rhs(0.0, x0), cfg)
    dev = float(np.max(np.abs(cyc.Y_T - np.eye(system.dim))))
    degenerate = abs(Tprime) <= deg_tol
    return DegeneracyReport(alpha0, float(Tprime), (Tm, Tp), degenerate, dev,
                            degenerate == (dev <= max(unit_tol, 1e-7) * 10))
