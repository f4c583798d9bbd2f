"""Topological degree in one and two dimensions.

Planar degrees are winding numbers of a field along a sampled closed curve.
Consecutive field values are compared through the wrapped ``atan2`` angle
increment, and a segment is split whenever its increment reaches ``pi/2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

Array = np.ndarray
TWO_PI = 2 * math.pi


class DegreeError(RuntimeError):
    pass


# ---------------------------------------------------------------- curves

def _signed_area(P: Array) -> float:
    x, y = P[:, 0], P[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(P: Array) -> bool:
    """True if two non-adjacent edges of the closed polygon ``P`` intersect."""
    A, B = P, np.roll(P, -1, axis=0)
    m = len(P)

    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - \
               (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

    lo_x = np.minimum(A[:, 0], B[:, 0])
    hi_x = np.maximum(A[:, 0], B[:, 0])
    lo_y = np.minimum(A[:, 1], B[:, 1])
    hi_y = np.maximum(A[:, 1], B[:, 1])
    for i in range(m - 2):
        j = np.arange(i + 2, m if i > 0 else m - 1)
        if j.size == 0:
            continue
        box = (lo_x[j] <= hi_x[i]) & (hi_x[j] >= lo_x[i]) & (lo_y[j] <= hi_y[i]) & (hi_y[j] >= lo_y[i])
        j = j[box]
        if j.size == 0:
            continue
        d1 = orient(A[i], B[i], A[j])
        d2 = orient(A[i], B[i], B[j])
        d3 = orient(A[j], B[j], A[i])
        d4 = orient(A[j], B[j], B[i])
        if np.any((d1 * d2 < 0) & (d3 * d4 < 0)):
            return True
    return False


@dataclass
class SampledCurve:
    """Closed polygon through ``points`` (the closing edge is implicit).

    ``param`` optionally maps a real parameter to a point, with ``params``
    the parameter values of the samples; refinement then inserts exact curve
    points instead of chord midpoints.
    """

    points: Array
    orientation: int = 0
    params: Optional[Array] = None
    param: Optional[Callable[[float], Array]] = None
    period: Optional[float] = None
    check_simple: bool = True

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if P.ndim != 2 or P.shape[1] != 2:
            raise ValueError("curve points must have shape (m, 2)")
        tol = 1e-9 * (1.0 + float(np.max(np.abs(P))))
        if len(P) > 1 and np.linalg.norm(P[-1] - P[0]) <= tol:
            P = P[:-1]
            if self.params is not None:
                self.params = np.asarray(self.params, dtype=float)[:-1]
        if len(P) < 3:
            raise ValueError("a closed curve needs at least three distinct points")
        self.points = P
        area = _signed_area(P)
        if area == 0:
            raise ValueError("curve encloses no area")
        sign = 1 if area > 0 else -1
        if self.orientation == 0:
            self.orientation = sign
        elif self.orientation != sign:
            raise ValueError("declared orientation disagrees with the signed area")
        if self.check_simple and _segments_cross(P):
            raise ValueError("curve is not simple")
        if self.params is not None:
            self.params = np.asarray(self.params, dtype=float)
            if self.param is None or self.period is None:
                raise ValueError("params need a parametrization and its period")

    @property
    def signed_area(self) -> float:
        return _signed_area(self.points)

    def reversed(self) -> "SampledCurve":
        P = self.points[::-1]
        params = None if self.params is None else self.params[::-1]
        param = self.param
        return SampledCurve(P, -self.orientation, None if params is None else -params,
                            None if param is None else (lambda s: param(-s)), self.period,
                            check_simple=False)

    def contains(self, q) -> Array:
        """Point-in-polygon test (crossing number); ``q`` of shape (2,) or (k, 2)."""
        Q = np.atleast_2d(np.asarray(q, dtype=float))
        A, B = self.points, np.roll(self.points, -1, axis=0)
        ay, by = A[None, :, 1], B[None, :, 1]
        qy, qx = Q[:, None, 1], Q[:, None, 0]
        straddle = (ay > qy) != (by > qy)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = A[None, :, 0] + (qy - ay) * (B[None, :, 0] - A[None, :, 0]) / (by - ay)
        inside = np.sum(straddle & (qx < xc), axis=1) % 2 == 1
        return inside if np.ndim(q) > 1 else bool(inside[0])

    def distance(self, q) -> Array:
        """Euclidean distance from point(s) to the polygon."""
        Q = np.atleast_2d(np.asarray(q, dtype=float))
        A, B = self.points, np.roll(self.points, -1, axis=0)
        D = B - A
        L2 = np.maximum(np.sum(D * D, axis=1), 1e-300)
        W = Q[:, None, :] - A[None, :, :]
        s = np.clip(np.sum(W * D[None], axis=2) / L2[None], 0.0, 1.0)
        d = np.linalg.norm(W - s[..., None] * D[None], axis=2).min(axis=1)
        return d if np.ndim(q) > 1 else float(d[0])

    @staticmethod
    def from_function(fun: Callable[[float], Array], period: float, count: int = 512,
                      check_simple: bool = True) -> "SampledCurve":
        s = np.linspace(0.0, period, count, endpoint=False)
        P = np.array([np.asarray(fun(v), dtype=float) for v in s])
        return SampledCurve(P, 0, s, fun, period, check_simple)

    @staticmethod
    def circle(radius: float = 1.0, center=(0.0, 0.0), count: int = 256,
               ccw: bool = True) -> "SampledCurve":
        c = np.asarray(center, dtype=float)
        sgn = 1.0 if ccw else -1.0
        return SampledCurve.from_function(
            lambda s: c + radius * np.array([math.cos(sgn * s), math.sin(sgn * s)]),
            TWO_PI, count)

    @staticmethod
    def from_csv(path) -> "SampledCurve":
        rows = []
        with open(path) as fh:
            for row in csv.reader(fh):
                if not row or row[0].strip().lower() in ("x", "#"):
                    continue
                rows.append([float(row[0]), float(row[1])])
        return SampledCurve(np.array(rows))


# ---------------------------------------------------------------- winding number

@dataclass(frozen=True)
class DegreeResult:
    value: int
    min_field_norm: float
    reliable: bool
    samples: int
    max_increment: float
    raw_turns: float

    def as_dict(self) -> dict:
        return {"value": self.value, "min_field_norm": self.min_field_norm,
                "reliable": self.reliable, "samples": self.samples,
                "max_increment": self.max_increment, "raw_turns": self.raw_turns}


def _wrap(a: Array) -> Array:
    return np.pi - np.mod(np.pi - a, TWO_PI)      # into (-pi, pi]


def _field(F: Callable, P: Array) -> Array:
    try:
        V = np.asarray(F(P.T), dtype=float)
        if V.shape == P.T.shape:
            return V.T
    except Exception:
        pass
    return np.array([np.asarray(F(p), dtype=float) for p in P])


def winding_number(F: Callable, curve: SampledCurve, refine_budget: int = 20000,
                   degenerate_ratio: float = 1e-3) -> DegreeResult:
    """Number of turns of ``F`` along ``curve`` in its traversal direction."""
    P = curve.points.copy()
    s = None if curve.params is None else curve.params.copy()
    V = _field(F, P)
    norms = np.linalg.norm(V, axis=1)
    med = float(np.median(norms))
    if med == 0 or np.any(norms < degenerate_ratio * med):
        raise DegreeError("field degenerate on boundary")
    budget = refine_budget
    while True:
        ang = np.arctan2(V[:, 1], V[:, 0])
        inc = _wrap(np.roll(ang, -1) - ang)
        bad = np.nonzero(np.abs(inc) >= np.pi / 2)[0]
        if bad.size == 0 or budget <= 0:
            break
        bad = bad[:budget]
        budget -= bad.size
        nxt = (bad + 1) % len(P)
        if s is not None:
            s_next = np.where(nxt == 0, s[0] + curve.period, s[nxt])
            s_new = 0.5 * (s[bad] + s_next)
            P_new = np.array([np.asarray(curve.param(v), dtype=float) for v in s_new])
        else:
            P_new = 0.5 * (P[bad] + P[nxt])
        V_new = _field(F, P_new)
        n_new = np.linalg.norm(V_new, axis=1)
        if np.any(n_new < degenerate_ratio * med):
            raise DegreeError("field degenerate on boundary")
        P = np.insert(P, bad + 1, P_new, axis=0)
        V = np.insert(V, bad + 1, V_new, axis=0)
        if s is not None:
            s = np.insert(s, bad + 1, s_new)
    turns = float(np.sum(inc) / TWO_PI)
    mx = float(np.max(np.abs(inc)))
    norms = np.linalg.norm(V, axis=1)
    reliable = mx < np.pi / 2 and float(norms.min()) > degenerate_ratio * med
    return DegreeResult(int(round(turns)), float(norms.min()), bool(reliable), len(P), mx, turns)


def region_degree(F: Callable, curve: SampledCurve, **kw) -> DegreeResult:
    """Degree of ``F`` on the region bounded by ``curve`` (orientation-corrected)."""
    r = winding_number(F, curve, **kw)
    if curve.orientation < 0:
        r = DegreeResult(-r.value, r.min_field_norm, r.reliable, r.samples,
                         r.max_increment, -r.raw_turns)
    return r


def brute_force_winding(F: Callable, curve_fn: Callable[[float], Array], period: float,
                        samples: int = 10000) -> int:
    """Angular sum over a fixed dense sampling, no refinement (oracle)."""
    s = np.linspace(0.0, period, samples, endpoint=False)
    P = np.array([curve_fn(v) for v in s])
    V = _field(F, P)
    ang = np.arctan2(V[:, 1], V[:, 0])
    return int(round(float(np.sum(_wrap(np.roll(ang, -1) - ang))) / TWO_PI))


# ---------------------------------------------------------------- other degrees

def degree_1d(M: Callable[[float], float], a: float, b: float, zero_tol: float = 1e-12) -> int:
    """Brouwer degree of a scalar function on ``(a, b)``."""
    ma, mb = float(M(a)), float(M(b))
    if abs(ma) <= zero_tol or abs(mb) <= zero_tol:
        raise DegreeError("degree undefined at boundary")
    return int((np.sign(mb) - np.sign(ma)) / 2)


def brouwer_degree_regular(F: Callable, jacF: Callable, zeros: Sequence, region=None,
                           residual_tol: float = 1e-8, det_tol: float = 1e-12) -> int:
    """Sum of Jacobian determinant signs over the listed zeros.

    The list must be exhaustive in the region.  When ``region`` is a
    :class:`SampledCurve`, zeros outside it are rejected.
    """
    total = 0
    for z in zeros:
        z = np.asarray(z, dtype=float)
        r = float(np.linalg.norm(np.asarray(F(z), dtype=float)))
        if r > residual_tol:
            raise DegreeError(f"{z.tolist()} is not a zero (residual {r:.3g})")
        if region is not None and not region.contains(z):
            raise DegreeError(f"zero {z.tolist()} lies outside the region")
        J = np.atleast_2d(np.asarray(jacF(z), dtype=float))
        d = float(np.linalg.det(J))
        if abs(d) <= det_tol * max(1.0, float(np.linalg.norm(J)) ** J.shape[0]):
            raise DegreeError(f"singular Jacobian at zero {z.tolist()}")
        total += 1 if d > 0 else -1
    return total


@dataclass(frozen=True)
class BoundaryCycle:
    beta: int
    theta_first_exit: Optional[float]
    degree_1d_malkin: int
    touches_only: bool = False


def assemble_degree_1_60(n: int, deg_f_U: int, boundary_cycles: Sequence) -> int:
    """Degree of ``I - P_eps`` on ``U`` from the degree of ``f`` and boundary cycles.

    Each entry provides ``beta`` and the 1D degree of the Malkin function on
    ``(0, first exit time)``; cycles that only touch the boundary are skipped.
    """
    d = (-1) ** n * int(deg_f_U)
    for c in boundary_cycles:
        if isinstance(c, dict):
            c = BoundaryCycle(**c)
        if c.touches_only:
            continue
        d -= (-1) ** int(c.beta) * int(c.degree_1d_malkin)
    return d


# ---------------------------------------------------------------- two-zero certificate

@dataclass
class BorsukCertificate:
    holds: bool
    zeros: tuple = ()
    certified_degree_set: Optional[frozenset] = None
    reason: str = ""
    pairing_signs: tuple = ()
    formula_degree: Optional[int] = None
    winding: Optional[int] = None
    winding_in_set: Optional[bool] = None
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"holds": self.holds, "zeros": list(self.zeros),
                "certified_degree_set": None if self.certified_degree_set is None
                else sorted(self.certified_degree_set),
                "reason": self.reason, "pairing_signs": list(self.pairing_signs),
                "formula_degree": self.formula_degree, "winding": self.winding,
                "winding_in_set": self.winding_in_set}


def borsuk_two_zero_certificate(F: Callable, curve: Callable[[float], Array],
                                tangent: Callable[[float], Array],
                                z: Callable[[float], Array], T: float,
                                points: int = 512, xtol: float = 1e-10) -> BorsukCertificate:
    """Check the three conditions under which the degree of ``F`` on the
    region bounded by ``curve`` is 0 or 2.

    ``curve``, ``tangent`` and the directing function ``z`` are ``T``-periodic
    callables.  A failed condition gives ``holds=False`` with a reason.
    """
    th = np.linspace(0.0, T, points, endpoint=False)
    X = np.array([curve(t) for t in th])
    Xd = np.array([tangent(t) for t in th])
    Zs = np.array([z(t) for t in th])
    c1 = np.einsum("ij,ij->i", Zs, Xd)
    scale = np.linalg.norm(Zs, axis=1) * np.linalg.norm(Xd, axis=1)
    if np.any(np.abs(c1) <= 1e-9 * scale) or not (np.all(c1 > 0) or np.all(c1 < 0)):
        return BorsukCertificate(False, reason="directing function is not transversal "
                                               "to the curve")

    def pairing(t):
        return float(np.dot(np.asarray(F(curve(t)), dtype=float), z(t)))

    p = np.array([pairing(t) for t in th])
    pscale = float(np.max(np.abs(p)))
    fscale = max(float(np.linalg.norm(np.asarray(F(x), dtype=float))) for x in X[::max(1, points // 16)])
    if pscale <= 1e-12 * fscale * float(np.max(np.linalg.norm(Zs, axis=1))):
        return BorsukCertificate(False, reason="pairing with the directing function "
                                               "vanishes identically")
    tol = 1e-9 * max(pscale, 1e-300)
    zeros = []
    for i in range(points):
        a, b = th[i], th[i] + T / points
        pa, pb = p[i], p[(i + 1) % points]
        if abs(pa) <= tol:
            prev = p[i - 1]
            if prev * pb < 0:
                zeros.append(a)
                continue
            return BorsukCertificate(False, reason=f"zero at {a:.6g} without strict sign change")
        if pa * pb < 0:
            zeros.append(brentq(pairing, a, b, xtol=xtol))
    # tangential touches count as failures of strict monotonicity
    for i in range(points):
        q0, q1, q2 = abs(p[i - 1]), abs(p[i]), abs(p[(i + 1) % points])
        if q1 <= 1e-6 * pscale and q1 <= q0 and q1 <= q2 and p[i - 1] * p[(i + 1) % points] > 0:
            return BorsukCertificate(False, reason=f"tangential zero near {th[i]:.6g}")
    uniq: List[float] = []
    for t in sorted(float(t % T) for t in zeros):
        if not uniq or t - uniq[-1] > 10 * xtol:
            uniq.append(t)
    if len(uniq) > 1 and uniq[0] + T - uniq[-1] <= 10 * xtol:
        uniq.pop()
    zeros = uniq
    if len(zeros) != 2:
        return BorsukCertificate(False, tuple(zeros),
                                 reason=f"pairing has {len(zeros)} zeros, need exactly two")
    signs, inds = [], []
    h = 1e-6 * T
    for t in zeros:
        zt = np.asarray(z(t), dtype=float)
        perp = np.array([zt[1], -zt[0]])
        signs.append(int(np.sign(np.dot(np.asarray(F(curve(t)), dtype=float), perp))))
        inds.append(int(np.sign(pairing(t + h) - pairing(t - h))))
    if 0 in signs or signs[0] != -signs[1]:
        return BorsukCertificate(False, tuple(zeros), reason="orthogonal pairing signs "
                                 "at the two zeros are not opposite",
                                 pairing_signs=tuple(signs))
    # angular-function count: one turn from the tangent plus half the signed
    # jumps at the two zeros; reversing the traversal flips the indices
    orient = 1 if _signed_area(X) > 0 else -1
    formula = 1 + orient * (inds[0] * signs[0] + inds[1] * signs[1]) // 2
    curve_s = SampledCurve(X, 0, th, curve, T, check_simple=True)
    w = region_degree(F, curve_s).value
    cert = BorsukCertificate(True, tuple(zeros), frozenset({0, 2}), "",
                             tuple(signs), int(formula), w, w in (0, 2),
                             {"indices": inds, "orientation": orient})
    return cert
