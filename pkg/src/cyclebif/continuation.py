"""Perturbed periodic solutions: shooting, sweeps in eps, and predictions.

Solutions of the perturbed system are fixed points of the period map
``P_eps``; they are located by Newton's method with the monodromy of the
perturbed flow as Jacobian.  ``predict`` evaluates the hypotheses of the
existence results on a given cycle and reports margins for each of them.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import biffun as bf
from .cycles import (AdjointFrame, Cycle, CycleError, MonodromyData, dense_config,
                     find_cycle, make_cycle, monodromy, periodic_adjoint)
from .degree import DegreeError, SampledCurve, region_degree
from .flow import (DEFAULT_CONFIG, DenseTrajectory, IntegratorConfig, PerturbedSystem,
                   flow_map, integrate, variational_matrix)

Array = np.ndarray

SHOOT_TOL = 1e-9
MAX_ITER = 25
DAMPING = 0.5
COND_MAX = 1e13
MIN_LAMBDA = 1.0 / 64
STEP_CAP = 0.25
OFFSETS = (0.005, 0.01, 0.02, 0.05, 0.1)


class ShootError(RuntimeError):
    def __init__(self, kind: str, detail: str = ""):
        super().__init__(f"{kind}: {detail}" if detail else kind)
        self.kind = kind
        self.detail = detail


@dataclass
class PeriodicSolution:
    eps: float
    x0: Array
    traj: DenseTrajectory
    residual: float
    newton_iters: int
    T: float
    phase: Optional[float] = None
    recheck: Optional[float] = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.traj(np.mod(t, self.T))

    def samples(self, count: int = 1024) -> Array:
        t = np.linspace(0.0, self.T, count, endpoint=False)
        X = self.traj(t)
        return np.vstack([X, self.traj.x])

    def as_dict(self) -> dict:
        return {"eps": self.eps, "x0": self.x0.tolist(), "residual": self.residual,
                "newton_iters": self.newton_iters, "T": self.T, "phase": self.phase,
                "recheck": self.recheck}


def _map_jac(psys: PerturbedSystem, eps: float, x: Array, cfg: IntegratorConfig):
    Y, xT = variational_matrix(psys.at(eps), psys.period, 0.0, x, cfg, return_state=True)
    return xT - x, Y


def _finish(psys, eps, x, iters, cfg, phase=None) -> PeriodicSolution:
    T = psys.period
    sys_eps = psys.at(eps)
    traj = integrate(sys_eps, 0.0, T, x, dense_config(cfg, T, 1024))
    res = float(np.linalg.norm(traj.endpoint - x))
    half = cfg.with_(rel_tol=cfg.rel_tol / 2, abs_tol=cfg.abs_tol / 2)
    chk = float(np.linalg.norm(flow_map(sys_eps, T, 0.0, x, half) - x))
    return PeriodicSolution(float(eps), x.copy(), traj, res, iters, T,
                            None if phase is None else float(phase % T), chk)


def _cap(dx: Array, x: Array) -> Array:
    """Trust-region cap: steps longer than ``STEP_CAP * max(1, |x|)`` are shortened."""
    lim = STEP_CAP * max(1.0, float(np.linalg.norm(x)))
    n = float(np.linalg.norm(dx))
    return dx if n <= lim else dx * (lim / n)


def _check_cond(J: Array) -> None:
    s = np.linalg.svd(J, compute_uv=False)
    if s[0] == 0 or s[-1] <= s[0] / COND_MAX:
        raise ShootError("Jacobian near-singular",
                         f"condition number {s[0] / max(s[-1], 1e-300):.3g}")


def shoot(psys: PerturbedSystem, eps: float, guess, cfg: IntegratorConfig = DEFAULT_CONFIG,
          tol: float = SHOOT_TOL, max_iter: int = MAX_ITER,
          damping: float = DAMPING) -> PeriodicSolution:
    """Newton's method on ``P_eps(x) - x`` with damped steps."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    x = np.asarray(guess, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise ValueError("guess must be finite")
    n = x.size
    F, Y = _map_jac(psys, eps, x, cfg)
    r = float(np.linalg.norm(F))
    for it in range(max_iter):
        if r <= tol:
            return _finish(psys, eps, x, it, cfg)
        J = Y - np.eye(n)
        _check_cond(J)
        dx = _cap(np.linalg.solve(J, -F), x)
        lam = 1.0
        while True:
            xn = x + lam * dx
            try:
                Fn, Yn = _map_jac(psys, eps, xn, cfg)
                rn = float(np.linalg.norm(Fn))
            except Exception:
                rn = math.inf
            if rn < r:
                break
            lam *= damping
            if lam < MIN_LAMBDA:
                raise ShootError("nonconvergent", f"line search stalled at residual {r:.3g}")
        x, F, Y, r = xn, Fn, Yn, rn
    if r <= tol:
        return _finish(psys, eps, x, max_iter, cfg)
    raise ShootError("nonconvergent", f"residual {r:.3g} after {max_iter} iterations")


def first_order_guess(psys: PerturbedSystem, cycle: Cycle, theta: float, eps: float,
                      cfg: IntegratorConfig = DEFAULT_CONFIG) -> Array:
    """``x~(theta) - eps (Y_theta(T) - I)^+ Phi^0(x~(theta))`` with the component
    along ``x~'(theta)`` removed; the limit identity at ``t = 0`` read backwards."""
    xc = cycle(theta)
    if eps == 0:
        return xc.copy()
    Yt = cycle.Y(theta)
    M = Yt @ cycle.Y_T @ np.linalg.inv(Yt) - np.eye(cycle.dim)
    d = np.linalg.pinv(M, rcond=1e-8) @ bf.phi(psys, 0.0, xc, cfg)
    xd = cycle.deriv(theta)
    d -= (d @ xd) / (xd @ xd) * xd
    return xc - eps * d


def bordered_shoot(psys: PerturbedSystem, eps: float, cycle: Cycle, phase_guess: float,
                   cfg: IntegratorConfig = DEFAULT_CONFIG, tol: float = SHOOT_TOL,
                   max_iter: int = MAX_ITER, damping: float = DAMPING,
                   guess: Optional[Array] = None) -> PeriodicSolution:
    """Shooting for ``(x0, theta)`` with the phase condition
    ``<x0 - x~(theta), x~'(theta)> = 0``.

    Without ``guess`` the iteration starts from :func:`first_order_guess`.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    n = cycle.dim
    T = psys.period
    th = float(phase_guess)
    if guess is None:
        x = first_order_guess(psys, cycle, th, eps, cfg)
    else:
        x = np.asarray(guess, dtype=float).copy()

    def phase_parts(x, th):
        xc, xd = cycle(th), cycle.deriv(th)
        xdd = cycle.system.jacobian(0.0, xc) @ xd
        return float((x - xc) @ xd), xd, float(-(xd @ xd) + (x - xc) @ xdd)

    def resid(x, th):
        F, Y = _map_jac(psys, eps, x, cfg)
        p, xd, dp = phase_parts(x, th)
        return np.append(F, p), Y, xd, dp

    G, Y, xd, dp = resid(x, th)
    r = float(np.linalg.norm(G))
    for it in range(max_iter):
        if r <= tol:
            return _finish(psys, eps, x, it, cfg, th)
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = Y - np.eye(n)
        J[n, :n] = xd
        J[n, n] = dp
        _check_cond(J)
        du = np.linalg.solve(J, -G)
        du[:n] = _cap(du[:n], x)
        lam = 1.0
        while True:
            xn, thn = x + lam * du[:n], th + lam * du[n]
            try:
                Gn, Yn, xdn, dpn = resid(xn, thn)
                rn = float(np.linalg.norm(Gn))
            except Exception:
                rn = math.inf
            if rn < r:
                break
            lam *= damping
            if lam < MIN_LAMBDA:
                raise ShootError("nonconvergent", f"line search stalled at residual {r:.3g}")
        x, th, G, Y, xd, dp, r = xn, thn, Gn, Yn, xdn, dpn, rn
    if r <= tol:
        return _finish(psys, eps, x, max_iter, cfg, th)
    raise ShootError("nonconvergent", f"residual {r:.3g} after {max_iter} iterations")


# ---------------------------------------------------------------- geometry

def cycle_curve(cycle: Cycle, count: int = 8192) -> SampledCurve:
    t = np.linspace(0.0, cycle.T, count, endpoint=False)
    return SampledCurve(cycle(t), 0, t, lambda s: cycle(float(s)), cycle.T, check_simple=False)


def _distances(curve: SampledCurve, X: Array, chunk: int = 256) -> Array:
    return np.concatenate([curve.distance(X[i:i + chunk]) for i in range(0, len(X), chunk)])


@dataclass(frozen=True)
class SideResult:
    side: str
    margin: float
    indeterminate: bool
    inside_count: int
    outside_count: int


def classify_side(solution: PeriodicSolution, cycle: Cycle, samples: int = 1024,
                  curve: Optional[SampledCurve] = None, margin_tol: float = 1e-9) -> SideResult:
    """Inside/outside/crossing verdict of a solution relative to the cycle."""
    if cycle.dim != 2:
        raise ValueError("side classification is planar only")
    curve = curve or cycle_curve(cycle)
    X = solution.samples(samples)
    inside = curve.contains(X)
    d = _distances(curve, X)
    nin = int(np.sum(inside))
    nout = int(X.shape[0] - nin)
    side = "inside" if nout == 0 else "outside" if nin == 0 else "crossing"
    margin = float(d.min())
    return SideResult(side, margin, margin <= margin_tol, nin, nout)


def phase_estimate(x, cycle: Cycle, grid: int = 1024) -> tuple:
    """``theta`` minimizing ``|x - x~(theta)|`` and the distance."""
    x = np.asarray(x, dtype=float)
    th = np.linspace(0.0, cycle.T, grid, endpoint=False)
    d = np.linalg.norm(cycle(th) - x, axis=1)
    i = int(np.argmin(d))
    h = cycle.T / grid
    res = minimize_scalar(lambda t: float(np.linalg.norm(cycle(t) - x)),
                          bounds=(th[i] - h, th[i] + h), method="bounded",
                          options={"xatol": 1e-12})
    t = float(res.x)
    # bounded Brent stops near sqrt(macheps); polish on the orthogonality condition
    g = lambda s: float((cycle(s) - x) @ cycle.deriv(s))  # noqa: E731
    a, b = t - h, t + h
    if g(a) * g(b) < 0:
        t = brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    t %= cycle.T
    return t, float(np.linalg.norm(cycle(t) - x))


def hausdorff_to_cycle(solution: PeriodicSolution, cycle: Cycle,
                       curve: Optional[SampledCurve] = None, samples: int = 512) -> float:
    curve = curve or cycle_curve(cycle)
    return float(_distances(curve, solution.samples(samples)).max())


# ---------------------------------------------------------------- sweeps

@dataclass
class SweepRecord:
    eps: List[float] = field(default_factory=list)
    x0: List[List[float]] = field(default_factory=list)
    dist: List[float] = field(default_factory=list)
    hausdorff: List[float] = field(default_factory=list)
    phase: List[float] = field(default_factory=list)
    side: List[str] = field(default_factory=list)
    iters: List[int] = field(default_factory=list)
    truncated: bool = False
    failure: str = ""
    solutions: List[PeriodicSolution] = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "solutions"}
        return d

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "dist", "phase", "side"])
            for e, d, p, s in zip(self.eps, self.dist, self.phase, self.side):
                w.writerow([f"{e:.17g}", f"{d:.17g}", f"{p:.17g}", s])


def epsilon_sweep(psys: PerturbedSystem, cycle: Cycle, phase_guess: float,
                  eps_list: Sequence[float], cfg: IntegratorConfig = DEFAULT_CONFIG,
                  tol: float = SHOOT_TOL, guess: Optional[Array] = None) -> SweepRecord:
    """Warm-started bordered shooting down a decreasing list of ``eps``."""
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing and positive")
    rec = SweepRecord()
    curve = cycle_curve(cycle) if cycle.dim == 2 else None
    th, x = float(phase_guess), guess
    for k, e in enumerate(eps_list):
        try:
            sol = bordered_shoot(psys, e, cycle, th, cfg, tol, guess=x)
        except (ShootError, CycleError, np.linalg.LinAlgError) as exc:
            if k == 0:
                raise
            rec.truncated, rec.failure = True, f"eps={e:g}: {exc}"
            break
        ph, dist = phase_estimate(sol.x0, cycle)
        rec.eps.append(e)
        rec.x0.append(sol.x0.tolist())
        rec.dist.append(dist)
        rec.phase.append(ph)
        rec.iters.append(sol.newton_iters)
        if curve is not None:
            rec.hausdorff.append(hausdorff_to_cycle(sol, cycle, curve))
            rec.side.append(classify_side(sol, cycle, curve=curve).side)
        else:
            rec.hausdorff.append(float("nan"))
            rec.side.append("n/a")
        rec.solutions.append(sol)
        th, x = sol.phase, sol.x0
    return rec


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    used: int
    excluded: tuple


def rate_fit(sweep, dist: Optional[Sequence[float]] = None) -> RateFit:
    """Least-squares slope of ``log dist`` against ``log eps``.

    Accepts a :class:`SweepRecord` or two sequences ``(eps, dist)``.
    """
    if dist is None:
        eps, dist = sweep.eps, sweep.dist
    else:
        eps = sweep
    e = np.asarray(eps, dtype=float)
    d = np.asarray(dist, dtype=float)
    floor = 1e2 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(d))))
    keep = d > floor
    excluded = tuple(float(v) for v in e[~keep])
    if keep.sum() < 4:
        raise ValueError("need at least four points above the noise floor")
    lx, ly = np.log(e[keep]), np.log(d[keep])
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ np.array([slope, icpt])
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(icpt), r2, int(keep.sum()), excluded)


@dataclass(frozen=True)
class LimitIdentity:
    max_residual: float
    residuals: tuple
    t_grid: tuple
    eps: float
    theta0: float


def limit_identity_3_8(psys: PerturbedSystem, cycle: Cycle, solution: PeriodicSolution,
                       theta0: float, t_grid: Sequence[float],
                       cfg: IntegratorConfig = DEFAULT_CONFIG) -> LimitIdentity:
    """Residual of ``(Y(T) - I)(x~(0) - Omega(0, t, x_eps(t)))/eps = Phi^t(x~(0))``.

    The cycle is re-anchored at ``theta0``, the phase the solutions
    converge to, so that ``x_eps(t)`` approaches ``x~(t)``.
    """
    eps = solution.eps
    if eps <= 0:
        raise ValueError("need a solution with eps > 0")
    shifted = cycle.shifted(theta0, cfg)
    x0 = shifted.x0
    YmI = shifted.Y_T - np.eye(cycle.dim)
    t_grid = np.asarray(t_grid, dtype=float)
    rhs = bf.phi_all_s(psys, x0, t_grid, cfg)
    res = []
    for t, r in zip(t_grid, rhs):
        back = flow_map(psys.base, 0.0, float(t), solution(float(t)), cfg)
        lhs = YmI @ (x0 - back) / eps
        res.append(float(np.linalg.norm(lhs - r)))
    return LimitIdentity(max(res), tuple(res), tuple(t_grid.tolist()), eps, float(theta0))


# ---------------------------------------------------------------- transversal directions

def transversal_melnikov(cycle: Cycle, frame: AdjointFrame, psys: PerturbedSystem, s: float,
                         cfg: IntegratorConfig = DEFAULT_CONFIG,
                         quad: Optional[bf.CycleQuadrature] = None) -> Array:
    """``int_{s-T}^s Z_perp(tau)^T g(tau, x~(tau), 0) dtau`` for a simple cycle."""
    if frame.z_perp0 is None:
        raise CycleError("frame unavailable", "transversal adjoint basis needs a simple cycle")
    q = quad or bf.CycleQuadrature(cycle, frame)
    Zp0 = frame.z_perp0

    def ker(st):
        Zp = np.einsum("mij,jk->mik", cycle.Z(st.tau), Zp0)
        return np.einsum("mik,mi->mk", Zp, st.g(psys, 0.0))
    return np.atleast_1d(q.integral(ker, s - cycle.T, s))


def perp_transport_residual(frame: AdjointFrame, t: float) -> float:
    """``|Z_perp(t)^T - D~ Z_perp(t + T)^T|``."""
    T = frame.cycle.T
    A = frame.z_perp(t).T
    B = frame.D_tilde @ frame.z_perp(t + T).T
    return float(np.max(np.abs(A - B)))


@dataclass(frozen=True)
class DirectionSample:
    theta: float
    m_perp: float
    projection: float
    cosine: float
    gain: float


def direction_test(cycle: Cycle, frame: AdjointFrame, psys: PerturbedSystem,
                   solution: PeriodicSolution, thetas: Sequence[float],
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> List[DirectionSample]:
    """Angles between the transversal adjoint directions and the offset of
    the solution from the cycle on the section through ``x~(theta)``.

    ``cycle`` must be anchored so that ``x_eps(t)`` approaches ``x~(t)``.
    ``gain`` is ``projection / (eps M_perp)``, an estimate of the constant
    matrix relating the two in the planar case.
    """
    if cycle.dim != 2:
        raise ValueError("direction test is implemented for planar cycles")
    T = cycle.T
    q = bf.CycleQuadrature(cycle, frame)
    out = []
    for th in thetas:
        th = float(th)
        xc, xd = cycle(th), cycle.deriv(th)

        def h(t):
            return float((solution(t) - xc) @ xd)
        w = 0.05 * T
        grid = np.linspace(th - w, th + w, 41)
        vals = np.array([h(t) for t in grid])
        k = int(np.argmin(np.abs(grid - th)))
        t_sec = None
        for j in sorted(range(40), key=lambda j: abs(j - k)):
            if vals[j] == 0 or vals[j] * vals[j + 1] < 0:
                t_sec = brentq(h, grid[j], grid[j + 1], xtol=1e-13) if vals[j] != 0 else grid[j]
                break
        if t_sec is None:
            raise ShootError("section", f"no section crossing near theta={th:g}")
        v = solution(t_sec) - xc
        zp = frame.z_perp(th)[:, 0]
        proj = float(zp @ v)
        mp = float(transversal_melnikov(cycle, frame, psys, th, cfg, q)[0])
        cosv = proj / (np.linalg.norm(zp) * np.linalg.norm(v))
        gain = proj / (solution.eps * mp) if mp != 0 else float("nan")
        out.append(DirectionSample(th, mp, proj, float(cosv), float(gain)))
    return out


# ---------------------------------------------------------------- first exit

@dataclass(frozen=True)
class FirstExit:
    theta: Optional[float]
    touches_only: bool
    crossings: int
    min_distance: float


def first_exit(cycle: Cycle, boundary: SampledCurve, start_tol: float = 1e-8,
               touch_tol: float = 1e-8) -> FirstExit:
    """First positive time at which the cycle crosses the boundary polygon."""
    t = cycle.traj.t
    t = t[(t >= 0) & (t <= cycle.T)]
    X = cycle(t)
    P0, P1 = X[:-1], X[1:]
    B0 = boundary.points
    B1 = np.roll(B0, -1, axis=0)
    r = P1 - P0
    s = B1 - B0
    times = []
    for i in range(len(P0)):
        denom = r[i, 0] * s[:, 1] - r[i, 1] * s[:, 0]
        qp = B0 - P0[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = (qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]) / denom
            v = (qp[:, 0] * r[i, 1] - qp[:, 1] * r[i, 0]) / denom
        hit = (denom != 0) & (u >= 0) & (u <= 1) & (v >= 0) & (v < 1)
        for uu in u[hit]:
            tc = t[i] + uu * (t[i + 1] - t[i])
            if tc > start_tol:
                times.append(float(tc))
    d = _distances(boundary, X)
    inside = boundary.contains(X)
    changes = int(np.sum(inside[1:] != inside[:-1]))
    if times and changes > 0:
        return FirstExit(min(times), False, len(times), float(d.min()))
    touches = bool(np.any(d[1:] <= touch_tol))
    return FirstExit(None, touches, 0, float(d.min()))


# ---------------------------------------------------------------- two-sided search

@dataclass
class TwoSided:
    eps: float
    inside: Optional[PeriodicSolution]
    outside: Optional[PeriodicSolution]
    inside_side: Optional[SideResult]
    outside_side: Optional[SideResult]
    attempts: int
    failures: List[str] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.inside is not None and self.outside is not None

    @property
    def separation(self) -> float:
        if not self.found:
            return float("nan")
        t = np.linspace(0, self.inside.T, 256, endpoint=False)
        return float(np.max(np.linalg.norm(self.inside(t) - self.outside(t), axis=1)))

    def as_dict(self) -> dict:
        return {"eps": self.eps, "found": self.found, "attempts": self.attempts,
                "inside": None if self.inside is None else self.inside.as_dict(),
                "outside": None if self.outside is None else self.outside.as_dict(),
                "inside_margin": None if self.inside_side is None else self.inside_side.margin,
                "outside_margin": None if self.outside_side is None else self.outside_side.margin,
                "separation": self.separation, "failures": self.failures[:20]}


def two_sided_search(psys: PerturbedSystem, eps: float, cycle: Cycle, phases: Sequence[float],
                     cfg: IntegratorConfig = DEFAULT_CONFIG, offsets: Sequence[float] = OFFSETS,
                     threads: int = 1, tol: float = SHOOT_TOL) -> TwoSided:
    """Multistart shooting from radial offsets of ``x~(theta)`` at each phase."""
    curve = cycle_curve(cycle)
    pts = cycle(np.linspace(0, cycle.T, 256, endpoint=False))
    center = pts.mean(axis=0)
    scale = float(np.max(np.linalg.norm(pts - center, axis=1)))
    starts = []
    for off in offsets:
        for th in phases:
            xc, xd = cycle(float(th)), cycle.deriv(float(th))
            nrm = np.array([xd[1], -xd[0]]) / np.linalg.norm(xd)
            if curve.contains(xc + 1e-6 * scale * nrm):
                nrm = -nrm                               # point outward
            for sgn in (-1.0, 1.0):
                starts.append(xc + sgn * off * scale * nrm)
    res = TwoSided(float(eps), None, None, None, None, 0)

    def attempt(x):
        try:
            sol = shoot(psys, eps, x, cfg, tol)
            return sol, classify_side(sol, cycle, curve=curve), None
        except (ShootError, np.linalg.LinAlgError) as exc:
            return None, None, str(exc)

    batch = max(1, threads)
    for i in range(0, len(starts), batch):
        chunk = starts[i:i + batch]
        if batch > 1:
            with ThreadPoolExecutor(max_workers=batch) as ex:
                outs = list(ex.map(attempt, chunk))
        else:
            outs = [attempt(x) for x in chunk]
        for sol, side, err in outs:
            res.attempts += 1
            if sol is None:
                res.failures.append(err)
                continue
            if side.side == "inside" and res.inside is None and not side.indeterminate:
                res.inside, res.inside_side = sol, side
            elif side.side == "outside" and res.outside is None and not side.indeterminate:
                res.outside, res.outside_side = sol, side
        if res.found:
            break
    return res


# ---------------------------------------------------------------- predictions

@dataclass
class Hypothesis:
    name: str
    passed: bool
    margin: Optional[float] = None
    detail: str = ""


@dataclass
class TheoremEntry:
    name: str
    hypotheses: List[Hypothesis] = field(default_factory=list)
    conclusion: Optional[str] = None
    predicted: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.hypotheses) and all(h.passed for h in self.hypotheses)

    def conclude(self, text: str, **items) -> None:
        if self.passed:
            self.conclusion = text
            self.predicted.update(items)


@dataclass
class PredictionReport:
    scenario: str
    entries: List[TheoremEntry] = field(default_factory=list)
    facts: dict = field(default_factory=dict)

    def entry(self, name: str) -> Optional[TheoremEntry]:
        for e in self.entries:
            if e.name == name:
                return e
        return None

    def as_dict(self) -> dict:
        return _jsonable({"scenario": self.scenario, "facts": self.facts,
                          "entries": [asdict(e) for e in self.entries]})


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _a1(scn, cycle: Cycle, md: MonodromyData, cfg, h: float = 1e-2) -> Hypothesis:
    """The cycle is the only T-periodic cycle near itself."""
    if md.unit_multiplicity == 1:
        return Hypothesis("A1: isolated T-periodic cycle", True, None, "simple cycle")
    if scn is None or scn.family is None or scn.alpha0 is None:
        return Hypothesis("A1: isolated T-periodic cycle", False, None,
                          "no cycle family available to check neighbouring periods")
    gaps = []
    for a in (scn.alpha0 - h, scn.alpha0 + h):
        x = np.asarray(scn.family(a), dtype=float)
        try:
            Ta = find_cycle(scn.system, x, scn.system.rhs(0.0, x), cfg).minimal_period
        except CycleError as exc:
            return Hypothesis("A1: isolated T-periodic cycle", False, None, str(exc))
        gaps.append(abs(Ta - cycle.T))
    m = min(gaps)
    return Hypothesis("A1: isolated T-periodic cycle", m > 1e-9, m,
                      f"|T(alpha0 +- {h:g}) - T| = {gaps}")


def _f_tilde_zeros(cycle, frame, psys, points, q):
    fun = lambda th: bf.adjoint_integral(cycle, frame, psys, th, 0.0, q)  # noqa: E731
    return bf.sample(fun, cycle.T, points, "f_tilde")


def minus_phi_T_degree(psys: PerturbedSystem, cycle: Cycle, cfg: IntegratorConfig = DEFAULT_CONFIG,
                       count: int = 32):
    """Degree of ``-Phi^T`` on the region bounded by a planar cycle."""
    curve = SampledCurve.from_function(lambda s: cycle(float(s)), cycle.T, count,
                                       check_simple=False)
    return region_degree(lambda x: -bf.phi(psys, psys.period, x, cfg, path="fast"), curve,
                         refine_budget=256)


def predict(psys: PerturbedSystem, cycle: Cycle, frame: Optional[AdjointFrame] = None,
            cfg: IntegratorConfig = DEFAULT_CONFIG, scenario=None, points: int = 128,
            boundary_points: int = 24, s_points: int = 16,
            threads: int = 1) -> PredictionReport:
    """Evaluate the hypotheses of the existence results on ``cycle``."""
    md = monodromy(cycle.system, cycle, cfg)
    if frame is None:
        frame = periodic_adjoint(cycle.system, cycle, cfg, md)
    name = scenario.name if scenario is not None else psys.name
    rep = PredictionReport(name)
    dev = float(np.max(np.abs(cycle.Y_T - np.eye(cycle.dim))))
    rep.facts = {"T": cycle.T, "x0": cycle.x0.tolist(), "unit_multiplicity": md.unit_multiplicity,
                 "beta": md.beta, "multipliers": md.as_table(), "monodromy_identity_dev": dev,
                 "condition_C": frame.condition_C, "pairing_sign": frame.pairing_sign}
    q = bf.CycleQuadrature(cycle, frame)
    simple = md.unit_multiplicity == 1
    planar = cycle.dim == 2

    # degeneracy of the family member
    e = TheoremEntry("degeneracy")
    if scenario is not None and scenario.family is not None and scenario.alpha0 is not None:
        from .cycles import degeneracy_report
        dr = degeneracy_report(cycle.system, scenario.family, scenario.alpha0, cfg)
        e.hypotheses.append(Hypothesis("T'(alpha0) = 0", dr.degenerate, dr.T_prime))
        e.hypotheses.append(Hypothesis("monodromy equals identity", dev <= 1e-6, dev))
        e.conclude("degenerate cycle: every variational solution is T-periodic",
                   consistent=dr.consistent)
        rep.facts["T_prime"] = dr.T_prime
    else:
        e.hypotheses.append(Hypothesis("cycle family available", False, None, "no family"))
    rep.entries.append(e)

    # Malkin-based results for simple cycles
    e = TheoremEntry("Theorem 1.6")
    e13 = TheoremEntry("Corollary 1.3")
    e.hypotheses.append(Hypothesis("simple cycle", simple, None,
                                   f"unit multiplicity {md.unit_multiplicity}"))
    e13.hypotheses.append(Hypothesis("simple cycle", simple, None,
                                     f"unit multiplicity {md.unit_multiplicity}"))
    if simple and frame.pairing_sign != 0:
        ms = bf.sample(lambda th: bf.malkin(cycle, frame, psys, th, quad=q), cycle.T, points,
                       "malkin", threads)
        zs = ms.certified
        e.hypotheses.append(Hypothesis("Malkin function changes sign", len(zs) > 0,
                                       float(np.max(ms.values) * -np.min(ms.values))))
        e.conclude("T-periodic solutions near the cycle at each sign change", phases=zs,
                   count=len(zs))
        slopes = [abs(z.local_slope) for z in ms.zeros if z.kind == "sign-change"]
        e13.hypotheses.append(Hypothesis("strictly monotone at the zeros",
                                         bool(slopes) and min(slopes) > 1e-8,
                                         min(slopes) if slopes else None))
        e13.conclude("one solution per strictly monotone zero", phases=zs)
        rep.facts["malkin_zeros"] = [z.as_dict() for z in ms.zeros]
    rep.entries += [e, e13]

    # sinusoidal forcing phases
    e = TheoremEntry("Corollary 1.5")
    fc = psys.forcing
    k = None
    if fc is not None and fc.kind == "sin":
        kk = fc.omega * cycle.T / (2 * math.pi)
        if abs(kk - round(kk)) < 1e-9 and round(kk) >= 1:
            k = int(round(kk))
    e.hypotheses.append(Hypothesis("simple cycle", simple))
    e.hypotheses.append(Hypothesis("forcing (0, sin(2 pi k t/T) g(x))", k is not None and planar))
    if simple and k is not None and planar and frame.pairing_sign != 0:
        try:
            gs = lambda x: fc.shape(np.asarray(x))[1]  # noqa: E731
            sd = bf.sinusoidal_decomposition(cycle, frame, k, gs, cfg, psys)
            e.hypotheses.append(Hypothesis("M_cos != 0", sd.cos_nonzero, abs(sd.M_cos)))
            if sd.cos_nonzero:
                e.conclude("2k phases of T-periodic solutions",
                           phases=bf.predicted_phases(sd.M_sin, sd.M_cos, cycle.T, k),
                           M_sin=sd.M_sin, M_cos=sd.M_cos)
        except bf.BifError as exc:
            e.hypotheses.append(Hypothesis("forcing shape check", False, None, str(exc)))
    rep.entries.append(e)

    if not planar:
        return rep

    a1 = _a1(scenario, cycle, md, cfg)

    # averaging-operator conditions on the boundary of the cycle interior
    t_b = np.linspace(0.0, cycle.T, boundary_points, endpoint=False)
    boundary = cycle(t_b)
    s_grid = np.linspace(0.0, cycle.T, s_points + 1)
    try:
        nd = bf.phi_nondegeneracy_scan(psys, boundary, s_grid, cfg, threads=threads)
        nd_h = Hypothesis("Phi^s nonzero on the cycle", nd.nondegenerate,
                          nd.min_norm - nd.nd_tol, f"min |Phi| {nd.min_norm:.6g}")
    except bf.BifError as exc:
        nd_h = Hypothesis("Phi^s nonzero on the cycle", False, None, str(exc))
    try:
        dg = minus_phi_T_degree(psys, cycle, cfg)
        deg = dg.value
        deg_h = Hypothesis("d(-Phi^T, U) != 1", deg != 1 and dg.reliable, float(deg),
                           f"winding {deg}")
    except DegreeError as exc:
        deg, deg_h = None, Hypothesis("d(-Phi^T, U) != 1", False, None, str(exc))
    rep.facts["degree_minus_phi_T"] = deg

    e = TheoremEntry("Theorem 2.5", [nd_h, a1, deg_h])
    e.conclude("at least two T-periodic solutions, one inside and one outside the cycle; "
               "no T-periodic solution meets the cycle", count=2, sides=["inside", "outside"])
    rep.entries.append(e)

    # decomposition-based conditions under a double multiplier +1
    if frame.condition_C:
        zs = _f_tilde_zeros(cycle, frame, psys, points, q)
        zeros = zs.certified
        c = frame.ratio
        margins, fh_vals = [], []
        for th0 in zeros:
            fh = bf.complementary_integral(cycle, frame, psys, th0, q)
            fs = [abs(c * bf.adjoint_integral(cycle, frame, psys, th0, s + th0, q))
                  for s in s_grid]
            margins.append(abs(fh) - max(fs))
            fh_vals.append(abs(fh))
        cond_C = Hypothesis("double multiplier +1", True)
        e = TheoremEntry("Theorem 2.6", [cond_C, a1])
        e.hypotheses.append(Hypothesis("|f^| > |c f~(theta0, s + theta0)| at zeros of f~",
                                       bool(margins) and min(margins) > 0,
                                       min(margins) if margins else None,
                                       f"zeros {zeros}"))
        e.conclude("no T-periodic solution meets the cycle for small eps", zeros=zeros)
        if e.passed:
            e.hypotheses.append(deg_h)
            if deg_h.passed:
                e.conclusion += "; at least two solutions, one inside and one outside"
                e.predicted.update(count=2, sides=["inside", "outside"])
        rep.entries.append(e)
        rep.facts["f_tilde_zeros"] = zeros

        e = TheoremEntry("Corollary 2.1", [Hypothesis("degenerate cycle", dev <= 1e-6, dev),
                                           cond_C, a1])
        e.hypotheses.append(Hypothesis("f^ != 0 at zeros of f~",
                                       bool(fh_vals) and min(fh_vals) > 1e-8,
                                       min(fh_vals) if fh_vals else None))
        e.hypotheses.append(deg_h)
        e.conclude("at least two T-periodic solutions, one inside and one outside; "
                   "none meets the cycle", count=2, sides=["inside", "outside"], zeros=zeros)
        rep.entries.append(e)

    # symmetric sine-forced systems
    sym = _symmetric_entries(psys, cycle, frame, cfg, scenario, dev, a1)
    rep.entries += sym
    return rep


def _symmetric_entries(psys, cycle, frame, cfg, scenario, dev, a1) -> List[TheoremEntry]:
    from .systems import symmetry_residuals
    fc = psys.forcing
    e = TheoremEntry("Theorem 2.7")
    e22 = TheoremEntry("Corollary 2.2")
    ok_form = fc is not None and fc.kind == "sin" and abs(fc.omega * cycle.T - 2 * math.pi) < 1e-8
    form_h = Hypothesis("forcing sin(w t) g(x) with period 2 pi/w", ok_form)
    e.hypotheses.append(form_h)
    e22.hypotheses.append(form_h)
    if not ok_form or not frame.condition_C:
        e.hypotheses.append(Hypothesis("double multiplier +1", frame.condition_C))
        e22.hypotheses.append(Hypothesis("double multiplier +1", frame.condition_C))
        return [e, e22]
    rng = np.random.default_rng(2)
    sr = symmetry_residuals(cycle.system.f, fc.shape, rng)
    worst = max(sr.values())
    sym_h = Hypothesis("reflection symmetries of f and g", worst <= 1e-7, worst)
    x0, xd0 = cycle.x0, cycle.deriv(0.0)
    anch = Hypothesis("x1(0) = 0, x2(0) != 0, x2'(0) = 0, x1'(0) != 0",
                      abs(x0[0]) < 1e-9 and abs(x0[1]) > 1e-9 and abs(xd0[1]) < 1e-9
                      and abs(xd0[0]) > 1e-9, float(abs(x0[0]) + abs(xd0[1])))
    # sign conditions on the boundary arc in the open first quadrant
    t = np.linspace(0, cycle.T, 2048, endpoint=False)
    X = cycle(t)
    q1 = (X[:, 0] > 1e-9) & (X[:, 1] > 1e-9)
    F = np.array([cycle.system.f(0.0, x) for x in X[q1]]) if q1.any() else np.zeros((0, 2))
    G = np.array([fc.shape(x) for x in X[q1]]) if q1.any() else np.zeros((0, 2))
    crosses = bool(np.any((X[:, 0] > 0) & (np.abs(X[:, 1]) < 1e-2 * np.max(np.abs(X)))))
    # g1 >= 0 rather than g1 > 0: the standard example has g1 identically zero
    sign_ok = bool(q1.any() and crosses and np.all(F[:, 0] > 0) and np.all(F[:, 1] < 0)
                   and np.all(G[:, 0] >= 0) and np.all(G[:, 1] > 0))
    sign_m = float(min(F[:, 0].min(), -F[:, 1].max(), G[:, 1].min())) if q1.any() else None
    sign_h = Hypothesis("f1 > 0, f2 < 0, g1 >= 0, g2 > 0 on the first-quadrant arc",
                        sign_ok, sign_m)
    si = bf.symmetry_integrals(cycle, psys, frame, cfg)
    xt, xh = si.xi_tilde, si.xi_hat
    r = abs(si.y_hat_1_T) / si.x_dot_1_0
    lhs = abs(xh[0]) + r * xt[0]
    rhs = min(abs(xh[1]) - r / 4 * xt[1], xt[0])
    base = [Hypothesis("double multiplier +1", True), a1, sym_h, anch, sign_h]
    e.hypotheses += base + [Hypothesis("|xi^1| + r xi~1 < min(|xi^2| - r xi~2/4, xi~1)",
                                       lhs < rhs, rhs - lhs,
                                       f"xi~={xt.tolist()}, xi^={xh.tolist()}, r={r:.6g}")]
    e.conclude("at least two T-periodic solutions, one inside and one outside; "
               "none meets the cycle", count=2, sides=["inside", "outside"])
    e.predicted.setdefault("xi_tilde", xt.tolist())
    e.predicted.setdefault("xi_hat", xh.tolist())
    m22 = min(abs(xh[1]), abs(xt[0])) - abs(xh[0])
    e22.hypotheses += [Hypothesis("degenerate cycle", dev <= 1e-6, dev)] + base + \
        [Hypothesis("|xi^1| < min(|xi^2|, |xi~1|)", m22 > 0, m22)]
    e22.conclude("at least two T-periodic solutions, one inside and one outside; "
                 "none meets the cycle", count=2, sides=["inside", "outside"])
    out = [e, e22]
    if scenario is not None and scenario.name == "greenspan_holmes":
        from .systems import gh_cubic_margin
        d = scenario.params["delta"]
        m = gh_cubic_margin(d)
        ep = TheoremEntry("Proposition 2.1",
                          [Hypothesis("2(1-delta)^3 - (3 pi^2 + 8 pi) delta > 0", m > 0, m)])
        ep.conclude("two solutions, inside and outside the unit circle",
                    count=2, sides=["inside", "outside"])
        out.append(ep)
    return out
