"""Command-line front end.

    cyclebif [global flags] {cycle,biffun,degree,predict,verify,demo} ...

A run is described by one JSON document (``--config``); flags override its
keys.  Reports are written to the output directory (``--out``, the
``CYCLEBIF_OUTPUT_DIR`` environment variable, or ``./cyclebif-out``) and
embed the resolved configuration.  Exit status: 0 success, 1 configuration
error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import biffun as bf
from . import continuation as cont
from . import degree as dg
from .cycles import CycleError, degeneracy_report, monodromy, periodic_adjoint
from .flow import IntegrationError, IntegratorConfig, PerturbedSystem, flow_map
from .systems import SCENARIOS, ScenarioError, make_scenario

ENV_OUT = "CYCLEBIF_OUTPUT_DIR"
DEFAULT_OUT = "cyclebif-out"

NUMERIC_ERRORS = (CycleError, cont.ShootError, bf.BifError, dg.DegreeError, IntegrationError,
                  np.linalg.LinAlgError, FloatingPointError)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- configuration

_INTEGRATOR_KEYS = {"rel_tol", "abs_tol", "max_step", "method", "rk4_step", "max_steps"}
_GRID_DEFAULTS = {"theta_points": 128, "s_points": 16, "phi_theta": 16, "phi_s": 8,
                  "boundary_points": 24, "limit_t_points": 8,
                  "eps": [1e-2, 3e-3, 1e-3, 3e-4, 1e-4], "eps_two_sided": [1e-3]}
_OPTION_DEFAULTS = {"zero_forcing": False, "sweep": True, "two_sided": True,
                    "phases": None, "offsets": list(cont.OFFSETS), "equilibrium": None,
                    "borsuk": True, "sweep_phases": "all"}
_TOP_KEYS = {"scenario", "params", "integrator", "grids", "options", "output_dir",
             "threads", "svg"}


@dataclass
class RunConfig:
    scenario: str = "greenspan_holmes"
    params: dict = field(default_factory=dict)
    integrator: dict = field(default_factory=dict)
    grids: dict = field(default_factory=lambda: copy.deepcopy(_GRID_DEFAULTS))
    options: dict = field(default_factory=lambda: copy.deepcopy(_OPTION_DEFAULTS))
    output_dir: Optional[str] = None
    threads: int = 1
    svg: bool = False

    @staticmethod
    def from_dict(d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(d) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = RunConfig()
        for k in ("scenario", "output_dir", "threads", "svg"):
            if k in d:
                setattr(cfg, k, d[k])
        cfg.params = dict(d.get("params", {}))
        for name, allowed, target in (("integrator", _INTEGRATOR_KEYS, cfg.integrator),
                                      ("grids", set(_GRID_DEFAULTS), cfg.grids),
                                      ("options", set(_OPTION_DEFAULTS), cfg.options)):
            sub = d.get(name, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"{name} must be an object")
            bad = set(sub) - allowed
            if bad:
                raise ConfigError(f"unknown {name} keys: {sorted(bad)}")
            target.update(sub)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {list(SCENARIOS)}")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError("threads must be a positive integer")
        for k in ("eps", "eps_two_sided"):
            v = self.grids[k]
            if not isinstance(v, list) or not v or any(not isinstance(e, (int, float)) or e <= 0
                                                       for e in v):
                raise ConfigError(f"grids.{k} must be a nonempty list of positive numbers")
        for k in ("theta_points", "s_points", "phi_theta", "phi_s", "boundary_points",
                  "limit_t_points"):
            if not isinstance(self.grids[k], int) or self.grids[k] < 2:
                raise ConfigError(f"grids.{k} must be an integer >= 2")
        try:
            self.integrator_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"integrator: {exc}") from None

    def integrator_config(self) -> IntegratorConfig:
        return IntegratorConfig(**self.integrator)

    def resolved(self) -> dict:
        return {"scenario": self.scenario, "params": self.params,
                "integrator": {**IntegratorConfig().__dict__, **self.integrator},
                "grids": self.grids, "options": self.options, "output_dir": self.output_dir,
                "threads": self.threads, "svg": self.svg}


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_config(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    cfg = RunConfig.from_dict(base)
    if args.scenario:
        if args.scenario != cfg.scenario and "params" not in base:
            cfg.params = {}
        cfg.scenario = args.scenario
    for item in args.param or []:
        if "=" not in item:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        cfg.params[k] = _parse_value(v)
    for item in args.set or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        path, v = item.split("=", 1)
        sec, key = path.split(".", 1)
        if sec not in ("integrator", "grids", "options"):
            raise ConfigError(f"--set section must be integrator, grids or options, not {sec!r}")
        allowed = {"integrator": _INTEGRATOR_KEYS, "grids": set(_GRID_DEFAULTS),
                   "options": set(_OPTION_DEFAULTS)}[sec]
        if key not in allowed:
            raise ConfigError(f"unknown {sec} key {key!r}")
        getattr(cfg, sec)[key] = _parse_value(v)
    if args.eps:
        cfg.grids["eps"] = [float(e) for e in args.eps.split(",")]
    if args.threads is not None:
        cfg.threads = args.threads
    if args.svg:
        cfg.svg = True
    out = args.out or os.environ.get(ENV_OUT) or cfg.output_dir or DEFAULT_OUT
    cfg.output_dir = out
    cfg.validate()
    return cfg


# ---------------------------------------------------------------- output helpers

def _num(v) -> str:
    return f"{float(v):.17g}"


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([c if isinstance(c, str) else _num(c) for c in r])


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(cont._jsonable(obj), fh, indent=2)


def write_svg(path: Path, series: List[tuple], title: str = "", size=(480, 360)) -> None:
    """Minimal line chart; ``series`` holds ``(label, xs, ys)`` tuples."""
    W, H = size
    pad = 40
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = (xs[ok].min(), xs[ok].max()) if ok.any() else (0, 1)
    y0, y1 = (ys[ok].min(), ys[ok].max()) if ok.any() else (0, 1)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{pad}" y="20" font-size="13">{title}</text>']
    for i, (label, sx, sy) in enumerate(series):
        px = pad + (np.asarray(sx, float) - x0) / (x1 - x0) * (W - 2 * pad)
        py = H - pad - (np.asarray(sy, float) - y0) / (y1 - y0) * (H - 2 * pad)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py) if math.isfinite(a + b))
        c = colors[i % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.2" points="{pts}"/>')
        parts.append(f'<text x="{W - pad - 120}" y="{30 + 14 * i}" font-size="11" '
                     f'fill="{c}">{label}</text>')
    parts.append(f'<text x="{pad}" y="{H - 10}" font-size="10">x: [{x0:.4g}, {x1:.4g}]  '
                 f'y: [{y0:.4g}, {y1:.4g}]</text>')
    parts.append("</svg>")
    path.write_text("\n".join(parts))


# ---------------------------------------------------------------- context

class Context:
    """Scenario, cycle and frame shared by the subcommands of one run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.icfg = cfg.integrator_config()
        try:
            self.scn = make_scenario(cfg.scenario, cfg.params)
        except ScenarioError as exc:
            raise ConfigError(str(exc)) from None
        psys = self.scn.psys
        if cfg.options.get("zero_forcing"):
            psys = _zero_forced(psys)
        self.psys = psys
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self._cycle = self._frame = self._md = None

    @property
    def cycle(self):
        if self._cycle is None:
            self._cycle = self.scn.cycle(self.icfg)
        return self._cycle

    @property
    def md(self):
        if self._md is None:
            self._md = monodromy(self.scn.system, self.cycle, self.icfg)
        return self._md

    @property
    def frame(self):
        if self._frame is None:
            self._frame = periodic_adjoint(self.scn.system, self.cycle, self.icfg, self.md)
        return self._frame

    def report(self, name: str, body: dict) -> Path:
        p = self.out / f"{name}.json"
        write_json(p, {"command": name, "version": __version__,
                       "config": self.cfg.resolved(), **body})
        return p


def _zero_forced(psys: PerturbedSystem) -> PerturbedSystem:
    n = psys.dim
    return PerturbedSystem(psys.base, lambda t, x, eps: np.zeros(n),
                           lambda t, x, eps: np.zeros((n, n)), None, psys.name + "+zero")


# ---------------------------------------------------------------- commands

def cmd_cycle(ctx: Context) -> dict:
    cyc, md = ctx.cycle, ctx.md
    body = {"cycle": cyc.to_json(), "T": cyc.T, "minimal_period": cyc.minimal_period,
            "multipliers": md.as_table(), "unit_multiplicity": md.unit_multiplicity,
            "beta": md.beta, "simple": md.unit_multiplicity == 1,
            "condition_C": ctx.frame.condition_C}
    if ctx.scn.family is not None and ctx.scn.alpha0 is not None:
        body["degeneracy"] = degeneracy_report(ctx.scn.system, ctx.scn.family, ctx.scn.alpha0,
                                               ctx.icfg).__dict__
    write_csv(ctx.out / "multipliers.csv", ["index", "re", "im", "abs"],
              [(i, r["re"], r["im"], r["abs"]) for i, r in enumerate(md.as_table())])
    t = np.linspace(0.0, cyc.T, 513)
    X = cyc(t)
    write_csv(ctx.out / "cycle.csv", ["t"] + [f"x{i + 1}" for i in range(cyc.dim)],
              np.column_stack([t, X]))
    if ctx.cfg.svg and cyc.dim == 2:
        write_svg(ctx.out / "cycle.svg", [("cycle", X[:, 0], X[:, 1])], ctx.scn.name)
    ctx.report("cycle", body)
    return body


def _phi_table(ctx: Context) -> tuple:
    cyc, g = ctx.cycle, ctx.cfg.grids
    th = np.linspace(0.0, cyc.T, g["phi_theta"], endpoint=False)
    s = np.linspace(0.0, ctx.psys.period, g["phi_s"], endpoint=False)
    vals = bf.map_grid(lambda t: bf.phi_all_s(ctx.psys, cyc(float(t)), s, ctx.icfg), th,
                       ctx.cfg.threads)
    rows = [(a, b, *v) for a, V in zip(th, vals) for b, v in zip(s, V)]
    return th, s, np.array(vals), rows


def cmd_biffun(ctx: Context) -> dict:
    cyc, fr, psys, g = ctx.cycle, ctx.frame, ctx.psys, ctx.cfg.grids
    q = bf.CycleQuadrature(cyc, fr)
    pts, thr = g["theta_points"], ctx.cfg.threads
    body: dict = {"functions": {}}
    tables = []
    if fr.pairing_sign != 0:
        tables.append(("malkin", bf.sample(lambda t: bf.malkin(cyc, fr, psys, t, quad=q),
                                           cyc.T, pts, "malkin", thr)))
    if fr.condition_C:
        tables.append(("f_tilde", bf.sample(lambda t: bf.adjoint_integral(cyc, fr, psys, t, 0.0, q),
                                            cyc.T, pts, "f_tilde", thr)))
        tables.append(("f_hat", bf.sample(lambda t: bf.complementary_integral(cyc, fr, psys, t, q),
                                          cyc.T, pts, "f_hat", thr)))
    if cyc.dim == 2:
        tables.append(("melnikov", bf.sample(lambda t: bf.melnikov(cyc, psys, t, quad=q),
                                             cyc.T, pts, "melnikov", thr)))
    for name, smp in tables:
        smp.to_csv(ctx.out / f"{name}.csv")
        body["functions"][name] = {"zeros": [z.as_dict() for z in smp.zeros],
                                   "max_abs": float(np.max(np.abs(smp.values)))}
        if ctx.cfg.svg:
            write_svg(ctx.out / f"{name}.svg", [(name, smp.grid.values, smp.values)], name)
    th, s, vals, rows = _phi_table(ctx)
    write_csv(ctx.out / "phi.csv", ["theta", "s"] + [f"phi{i + 1}" for i in range(cyc.dim)], rows)
    body["phi"] = {"max_norm": float(np.max(np.linalg.norm(vals, axis=-1))),
                   "theta_points": len(th), "s_points": len(s)}
    if "phi" in ctx.scn.closed_form and not ctx.cfg.options.get("zero_forcing"):
        closed = np.array([ctx.scn.closed_form["phi"](t) for t in th])
        body["phi"]["closed_form_max_dev"] = float(np.max(np.linalg.norm(
            vals - closed[:, None, :], axis=-1)))
    if fr.condition_C and psys.forcing is not None and psys.forcing.kind == "sin":
        try:
            si = bf.symmetry_integrals(cyc, psys, fr, ctx.icfg)
            body["symmetry_integrals"] = {"xi_tilde": si.xi_tilde.tolist(),
                                          "xi_hat": si.xi_hat.tolist(),
                                          "y_hat_1_T": si.y_hat_1_T, "x_dot_1_0": si.x_dot_1_0}
        except bf.BifError as exc:
            body["symmetry_integrals"] = {"unavailable": str(exc)}
    ctx.report("biffun", body)
    return body


def cmd_degree(ctx: Context) -> dict:
    cyc, psys = ctx.cycle, ctx.psys
    if cyc.dim != 2:
        raise ConfigError("degree reports are planar only")
    body: dict = {}
    curve = dg.SampledCurve.from_function(lambda s: cyc(float(s)), cyc.T, 256,
                                          check_simple=False)
    f_deg = dg.region_degree(lambda x: ctx.scn.system.rhs(0.0, x), curve)
    body["f_on_cycle"] = f_deg.as_dict()
    m = cont.minus_phi_T_degree(psys, cyc, ctx.icfg)
    body["minus_phi_T"] = m.as_dict()
    if ctx.cfg.options.get("borsuk"):
        F = lambda x: -bf.phi(psys, psys.period, x, ctx.icfg, path="fast")  # noqa: E731
        cert = dg.borsuk_two_zero_certificate(F, lambda s: cyc(float(s)), cyc.deriv, cyc.deriv,
                                              cyc.T, points=48)
        body["borsuk"] = cert.as_dict()
    eq = ctx.cfg.options.get("equilibrium") or ctx.scn.closed_form.get("equilibrium")
    if eq is not None:
        eq = np.asarray(eq, dtype=float)
        r = 0.05 * float(np.min(np.linalg.norm(cyc.samples(256)[1] - eq, axis=1)))
        small = dg.SampledCurve.circle(r, eq, 64)
        fw = dg.region_degree(lambda x: ctx.scn.system.rhs(0.0, x), small)
        eps = min(ctx.cfg.grids["eps_two_sided"])
        sys_e = psys.at(eps)
        direct = dg.region_degree(lambda x: x - flow_map(sys_e, psys.period, 0.0, x, ctx.icfg),
                                  small)
        body["formula_1_60"] = {"radius": r, "eps": eps, "deg_f": fw.value,
                                "assembled": dg.assemble_degree_1_60(2, fw.value, []),
                                "direct_I_minus_P": direct.value}
    ctx.report("degree", body)
    return body


def cmd_predict(ctx: Context) -> dict:
    g = ctx.cfg.grids
    rep = cont.predict(ctx.psys, ctx.cycle, ctx.frame, ctx.icfg, ctx.scn, g["theta_points"],
                       g["boundary_points"], g["s_points"], ctx.cfg.threads)
    body = rep.as_dict()
    body["summary"] = {e.name: e.passed for e in rep.entries}
    ctx.report("predict", body)
    return body


def _predicted_phases(ctx: Context) -> List[float]:
    opt = ctx.cfg.options.get("phases")
    if opt:
        return [float(p) for p in opt]
    cyc, fr, psys = ctx.cycle, ctx.frame, ctx.psys
    q = bf.CycleQuadrature(cyc, fr)
    if fr.pairing_sign != 0:
        fun = lambda t: bf.malkin(cyc, fr, psys, t, quad=q)  # noqa: E731
    elif fr.condition_C:
        fun = lambda t: bf.adjoint_integral(cyc, fr, psys, t, 0.0, q)  # noqa: E731
    else:
        fun = lambda t: bf.melnikov(cyc, psys, t, quad=q)  # noqa: E731
    return bf.sample(fun, cyc.T, ctx.cfg.grids["theta_points"], "phase",
                     ctx.cfg.threads).certified


def cmd_verify(ctx: Context) -> dict:
    cyc, psys, g, opt = ctx.cycle, ctx.psys, ctx.cfg.grids, ctx.cfg.options
    phases = _predicted_phases(ctx)
    body: dict = {"phases": phases, "sweeps": [], "two_sided": [], "errors": []}
    svg_series = [("cycle", *cyc.samples(512)[1].T[:2])] if cyc.dim == 2 else []
    if opt.get("sweep") and phases:
        use = phases if opt.get("sweep_phases") == "all" else phases[:1]
        for k, ph in enumerate(use):
            entry: dict = {"phase_guess": ph}
            try:
                rec = cont.epsilon_sweep(psys, cyc, ph, sorted(g["eps"], reverse=True), ctx.icfg)
            except NUMERIC_ERRORS as exc:
                entry["error"] = str(exc)
                body["errors"].append(f"sweep from {ph:.6g}: {exc}")
                body["sweeps"].append(entry)
                continue
            entry["record"] = rec.as_dict()
            rec.to_csv(ctx.out / f"sweep_{k}.csv")
            rec.to_json(ctx.out / f"sweep_{k}.json")
            try:
                entry["rate"] = cont.rate_fit(rec).__dict__
            except ValueError as exc:
                entry["rate"] = {"unavailable": str(exc)}
            theta0 = min(phases, key=lambda p: min(abs(p - rec.phase[-1]),
                                                   cyc.T - abs(p - rec.phase[-1])))
            tg = np.linspace(0.0, cyc.T, g["limit_t_points"], endpoint=False)
            if rec.solutions and not opt.get("zero_forcing"):
                try:
                    li = [cont.limit_identity_3_8(psys, cyc, s, theta0, tg, ctx.icfg)
                          for s in rec.solutions]
                    entry["limit_identity"] = {
                        "theta0": theta0, "t_grid": tg.tolist(),
                        "residuals_smallest_eps": list(li[-1].residuals),
                        "max_residual": li[-1].max_residual,
                        "ratio_over_eps": [x.max_residual / x.eps for x in li]}
                except NUMERIC_ERRORS as exc:
                    entry["limit_identity"] = {"error": str(exc)}
            if rec.solutions and cyc.dim == 2:
                X = rec.solutions[-1].samples(512)
                svg_series.append((f"eps={rec.eps[-1]:g}", X[:, 0], X[:, 1]))
                write_csv(ctx.out / f"solution_{k}.csv", ["x1", "x2"], X)
            body["sweeps"].append(entry)
    if opt.get("two_sided") and cyc.dim == 2 and phases:
        for eps in g["eps_two_sided"]:
            ts = cont.two_sided_search(psys, float(eps), cyc, phases, ctx.icfg,
                                       opt.get("offsets") or cont.OFFSETS, ctx.cfg.threads)
            d = ts.as_dict()
            for side in ("inside", "outside"):
                sol = getattr(ts, side)
                if sol is not None:
                    X = sol.samples(1024)
                    r = np.linalg.norm(X, axis=1)
                    d[f"{side}_radius_range"] = [float(r.min()), float(r.max())]
                    write_csv(ctx.out / f"two_sided_{side}_{eps:g}.csv", ["x1", "x2"], X)
            if not ts.found:
                body["errors"].append(f"two-sided search at eps={eps:g} incomplete")
            body["two_sided"].append(d)
    if ctx.cfg.svg and svg_series:
        write_svg(ctx.out / "verify.svg", svg_series, f"{ctx.scn.name}: solutions")
    ctx.report("verify", body)
    return body


DEMOS: Dict[str, dict] = {
    "duffing": {"scenario": "duffing", "params": {"delta": 0.05},
                "grids": {"eps": [1e-3, 3e-4, 1e-4, 3e-5], "eps_two_sided": [1e-4]}},
    "greenspan_holmes": {"scenario": "greenspan_holmes", "params": {"delta": 0.025},
                         "grids": {"eps": [1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
                                   "eps_two_sided": [1e-3]}},
    "degenerate_ring": {"scenario": "degenerate_ring",
                        "params": {"mu": 1.0, "nu": 0.0, "delta": 0.0},
                        "grids": {"eps_two_sided": [1e-3]},
                        "options": {"sweep": False, "borsuk": False}},
}


def cmd_demo(ctx: Context) -> dict:
    body = {}
    for name, fn in (("cycle", cmd_cycle), ("biffun", cmd_biffun), ("degree", cmd_degree),
                     ("predict", cmd_predict), ("verify", cmd_verify)):
        t0 = time.time()
        try:
            body[name] = {"ok": True, "result": fn(ctx)}
        except NUMERIC_ERRORS as exc:
            body[name] = {"ok": False, "error": str(exc)}
        body[name]["seconds"] = round(time.time() - t0, 3)
    pred = body.get("predict", {}).get("result", {})
    ver = body.get("verify", {}).get("result", {})
    claims = [e["name"] for e in pred.get("entries", []) if e.get("conclusion")
              and "inside" in e["conclusion"]]
    found = [t for t in ver.get("two_sided", []) if t.get("found")]
    body["summary"] = {"two_sided_predicted_by": claims,
                       "two_sided_found_at_eps": [t["eps"] for t in found],
                       "consistent": bool(claims) == bool(found)}
    ctx.report("demo", body)
    return body


COMMANDS = {"cycle": cmd_cycle, "biffun": cmd_biffun, "degree": cmd_degree,
            "predict": cmd_predict, "verify": cmd_verify, "demo": cmd_demo}


def _summary(name: str, body: dict) -> str:
    if name == "cycle":
        return (f"T={body['T']:.12g} unit_multiplicity={body['unit_multiplicity']} "
                f"beta={body['beta']}")
    if name == "predict":
        return " ".join(f"[{k}: {'pass' if v else 'fail'}]" for k, v in body["summary"].items())
    if name == "degree":
        return (f"deg(f)={body['f_on_cycle']['value']} "
                f"deg(-Phi^T)={body['minus_phi_T']['value']}")
    if name == "demo":
        return json.dumps(body["summary"])
    if name == "verify":
        return f"phases={body['phases']} errors={len(body['errors'])}"
    return ", ".join(f"{k}: {len(v['zeros'])} zeros" for k, v in body["functions"].items())


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cyclebif", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="scenario parameter (JSON value); repeatable")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="override integrator/grids/options keys; repeatable")
    p.add_argument("--eps", help="comma separated eps sweep")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help=f"output directory (env {ENV_OUT})")
    p.add_argument("--svg", action="store_true", help="also write SVG charts")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("cycle", "biffun", "degree", "predict", "verify"):
        sub.add_parser(name, help=COMMANDS[name].__name__.replace("cmd_", "") + " report")
    d = sub.add_parser("demo", help="end-to-end run of a bundled example")
    d.add_argument("name", choices=sorted(DEMOS))
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "demo":
            preset = copy.deepcopy(DEMOS[args.name])
            if args.config:
                raise ConfigError("demo takes no --config")
            cfg = RunConfig.from_dict(preset)
            args.scenario = None
            base_args = argparse.Namespace(**{**vars(args), "config": None})
            over = build_config(base_args)
            cfg.params.update(over.params)
            cfg.output_dir, cfg.threads, cfg.svg = over.output_dir, over.threads, over.svg
            if args.eps:
                cfg.grids["eps"] = over.grids["eps"]
            cfg.validate()
        else:
            cfg = build_config(args)
        ctx = Context(cfg)
        body = COMMANDS[args.command](ctx)
    except (ConfigError, ScenarioError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    print(f"{args.command}: {_summary(args.command, body)}")
    print(f"report: {Path(cfg.output_dir) / (args.command + '.json')}")
    if args.command == "verify" and body["errors"]:
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
