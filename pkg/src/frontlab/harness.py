"""Scenario files, pipeline orchestration and report emission."""

import configparser
import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from frontlab import fronts, levelsets, omega, wulff
from frontlab.eigen import principal_eigenvalue, slope_check
from frontlab.errors import ConfigError, FrontlabError
from frontlab.geometry import unit_circle
from frontlab.medium import PeriodicMedium, ReactionSpec, check_weak_stability, validate_medium
from frontlab.solver import Boundary, Grid, GridField, ball_datum, save_snapshot, simulate

STAGES = ("validate", "simulate", "speeds", "wulff", "hausdorff", "omega", "cones", "eigen")


def _floats(text):
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


# ---------------------------------------------------------------------------
# scenarios


@dataclass
class Scenario:
    """Resolved scenario: one flat dict per config section."""

    name: str
    medium: dict
    initial: dict
    grid: dict
    time: dict
    analysis: dict = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_config(cls, cfg: configparser.ConfigParser):
        try:
            sc = cfg["scenario"]
            s = cls(
                name=sc.get("name", "scenario"),
                seed=sc.getint("seed", 0),
                medium=dict(cfg["medium"]),
                initial=dict(cfg["initial"]),
                grid=dict(cfg["grid"]),
                time=dict(cfg["time"]),
                analysis=dict(cfg["analysis"]) if cfg.has_section("analysis") else {},
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"incomplete scenario: {exc}") from exc
        s.validate()
        return s

    @classmethod
    def load(cls, path):
        cfg = configparser.ConfigParser()
        if not cfg.read(path):
            raise ConfigError(f"cannot read {path}")
        return cls.from_config(cfg)

    @classmethod
    def from_string(cls, text):
        cfg = configparser.ConfigParser()
        cfg.read_string(text)
        return cls.from_config(cfg)

    # -- resolved values

    @property
    def dim(self):
        return int(self.medium.get("dim", 2))

    @property
    def h(self):
        return float(self.grid["h"])

    @property
    def T(self):
        return float(self.time["t"])

    @property
    def output_times(self):
        out = _floats(self.time.get("outputs", ""))
        return out if out else [self.T]

    @property
    def stages(self):
        raw = self.analysis.get("stages", "")
        names = [s.strip() for s in raw.split(",") if s.strip()]
        return ["validate", "simulate"] + [n for n in STAGES[2:] if n in names]

    def validate(self):
        try:
            h = self.h
            inv = 1.0 / h
        except (KeyError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad grid spacing: {exc}") from exc
        if h <= 0 or abs(inv - round(inv)) > 1e-9:
            raise ConfigError(f"grid spacing {h} does not divide the unit cell")
        if self.dim not in (1, 2):
            raise ConfigError("dimension must be 1 or 2")
        try:
            T = self.T
            outs = self.output_times
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad time section: {exc}") from exc
        if T <= 0 or any(t < 0 or t > T + 1e-9 for t in outs):
            raise ConfigError("output times must lie in [0, T]")
        bad = [n for n in self.analysis.get("stages", "").split(",") if n.strip() and n.strip() not in STAGES]
        if bad:
            raise ConfigError(f"unknown stages {bad}")
        self.build_medium()

    def resolved(self):
        return {"scenario": {"name": self.name, "seed": self.seed}, "medium": dict(self.medium),
                "initial": dict(self.initial), "grid": dict(self.grid), "time": dict(self.time),
                "analysis": dict(self.analysis)}

    # -- builders

    def reaction(self):
        m = self.medium
        kind = m.get("reaction", "bistable")
        try:
            if kind in ("bistable", "ignition"):
                return ReactionSpec(kind, {"alpha": float(m.get("alpha", 0.25))})
            if kind == "kpp":
                return ReactionSpec.kpp()
            if kind == "periodic-bistable":
                return ReactionSpec.periodic_bistable(float(m.get("alpha0", 0.25)), float(m.get("amplitude", 0.1)),
                                                      int(m.get("axis", 0)))
            if kind == "custom-table":
                return ReactionSpec.table(_floats(m["values"]))
        except (FrontlabError, KeyError, ValueError) as exc:
            raise ConfigError(f"bad reaction: {exc}") from exc
        raise ConfigError(f"unknown reaction {kind!r}")

    def build_medium(self) -> PeriodicMedium:
        m = self.medium
        dparams, qparams = {}, {}
        if "d" in m:
            dparams["d"] = _floats(m["d"])
        for key in ("a0", "amplitude_a", "axis_a"):
            if key in m:
                dparams[key.replace("_a", "")] = float(m[key])
        if "matrix" in m:
            dparams["matrix"] = _floats(m["matrix"])
        if "beta" in m:
            qparams["beta"] = float(m["beta"])
        if "v" in m:
            qparams["v"] = _floats(m["v"])
        try:
            return PeriodicMedium.from_catalog(self.dim, self.reaction(), m.get("diffusion", "identity"),
                                               m.get("drift", "zero"), dparams, qparams,
                                               int(m.get("resolution", 32)), float(m.get("delta", 0.05)))
        except FrontlabError as exc:
            raise ConfigError(f"bad medium: {exc}") from exc

    def build_grid(self) -> Grid:
        g = self.grid
        h = self.h
        if "lower" in g:
            lo, hi = _floats(g["lower"]), _floats(g["upper"])
            shape = tuple(int(round((b - a) / h)) + 1 for a, b in zip(lo, hi))
            return Grid(tuple(lo), shape, h)
        return Grid.box(float(g.get("half_width", 20.0)), h, self.dim)

    def boundary(self):
        b = self.grid.get("boundary", "neumann")
        if b == "neumann":
            return "neumann"
        vals = _floats(b.split(":", 1)[1]) if ":" in b else [0.0, 0.0]
        return ("dirichlet-farfield", vals[0], vals[1])

    def initial_datum(self, grid) -> GridField:
        d = self.initial
        kind = d.get("kind", "ball")
        x = grid.points()
        if kind == "ball":
            metric = _floats(d["metric"]) if "metric" in d else None
            if metric is not None:
                metric = np.diag(metric) if len(metric) == self.dim else np.reshape(metric, (self.dim, self.dim))
            return ball_datum(grid, float(d.get("theta", 1.0)), float(d.get("rho", 5.0)), metric=metric)
        if kind == "step":
            e = np.asarray(_floats(d.get("direction", "1,0"))[:self.dim])
            e = e / np.linalg.norm(e)
            return GridField(grid, np.where(x @ e < float(d.get("offset", 0.0)), 1.0, 0.0))
        if kind == "cone":
            alpha = float(d["alpha"])
            return GridField(grid, cone_datum(x, alpha))
        raise ConfigError(f"unknown initial datum {kind!r}")


def cone_datum(x, alpha):
    """Indicator of the cone ``{x_2 <= alpha |x_1|}``."""
    x = np.asarray(x, dtype=float)
    return np.where(x[..., 1] <= alpha * np.abs(x[..., 0]), 1.0, 0.0)


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class ReportBundle:
    scenario: Scenario
    summary: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    shapes: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    @property
    def complete(self):
        return not self.skipped


def _speed_stage(s: Scenario, m: PeriodicMedium):
    f = m.reaction
    n_dir = int(s.analysis.get("directions", 16))
    if m.dim == 1:
        dirs = np.array([[-1.0], [1.0]])
    else:
        dirs = unit_circle(n_dir)
    if m.homogeneous and f.kind in ("bistable", "ignition"):
        c1 = fronts.planar_front_shooting(f).speed
        A = m.sample_diffusion(np.zeros((1, m.dim)))[0]
        speeds = c1 * np.sqrt(np.einsum("ij,jk,ik->i", dirs, A, dirs))
        method = "shooting"
    else:
        tab = fronts.speed_table(m, dirs, h=float(s.analysis.get("speed_h", 0.1)),
                                 max_den=int(s.analysis.get("max_den", 3)))
        dirs, speeds = tab.directions, tab.speeds
        method = "simulation"
    if np.any(speeds <= 0):
        raise FrontlabError("non-positive front speed: no Wulff construction")
    return dirs, speeds, method


def run_scenario(s: Scenario, out_dir=None):
    """Execute the scenario's stages in dependency order.

    A failing stage is recorded in ``bundle.skipped`` and every stage that
    depends on it is skipped as well.
    """
    bundle = ReportBundle(s)
    m = s.build_medium()
    depends = {"speeds": ["validate"], "wulff": ["speeds"], "hausdorff": ["simulate", "wulff"],
               "omega": ["simulate", "speeds"], "cones": ["simulate"], "eigen": ["validate"]}
    ctx = {}

    def run(name, fn):
        missing = [d for d in depends.get(name, []) if d in bundle.skipped or d not in bundle.summary]
        if missing:
            bundle.skipped[name] = f"needs {', '.join(missing)}"
            return
        try:
            bundle.summary[name] = fn()
        except FrontlabError as exc:
            bundle.skipped[name] = f"{type(exc).__name__}: {exc}"

    def st_validate():
        rep = validate_medium(m)
        stab = check_weak_stability(m)
        return {"passed": rep.passed, "checks": rep.as_dict(), "weak_stability": bool(stab)}

    def st_simulate():
        grid = s.build_grid()
        u0 = s.initial_datum(grid)
        traj = simulate(m, u0, s.T, s.output_times, boundary=s.boundary())
        ctx["traj"] = traj
        final = traj.fields[-1]
        return {"times": [float(t) for t in traj.times], "grid": grid.describe(),
                "final_min": float(final.values.min()), "final_max": float(final.values.max()),
                "final_mass": float(final.values.sum() * grid.h ** grid.dim)}

    def st_speeds():
        dirs, speeds, method = _speed_stage(s, m)
        ctx["speeds"] = (dirs, speeds)
        bundle.series["speeds"] = [{"ex": float(d[0]), "ey": float(d[-1]), "speed": float(c)}
                                   for d, c in zip(dirs, speeds)]
        return {"method": method, "c_min": float(speeds.min()), "c_max": float(speeds.max())}

    def st_wulff():
        W = wulff.wulff_shape(ctx["speeds"])
        ctx["wulff"] = W
        out = {"w_min": float(W.radii.min()), "w_max": float(W.radii.max())}
        if W.dim == 2:
            out["convex"] = W.is_convex()
            bundle.shapes["target"] = W.vertices
            fg = wulff.regular_fg_check(W)
            out["fg_max_residual"] = fg.max_residual
        return out

    def st_hausdorff():
        lam = float(s.analysis.get("level", 0.5))
        target = ctx["wulff"]
        kind = s.initial.get("kind", "ball")
        window = None
        if kind == "cone":
            c = float(np.min(ctx["speeds"][1]))
            target = wulff.shifted_shape("cone", c, alpha=float(s.initial["alpha"]))
            window = levelsets.window_box(target.apex, 2.0 * c)
        elif kind == "step":
            e = np.asarray(_floats(s.initial.get("direction", "1,0")))
            e = e / np.linalg.norm(e)
            c = float(wulff.SpeedFunction.from_any(ctx["speeds"])(e[None, :])[0])
            target = wulff.shifted_shape("halfspace", c, direction=e)
            window = levelsets.window_box(target.apex, 2.0 * c)
        ser = levelsets.rescaled_convergence(ctx["traj"], lam, target, window=window)
        bundle.series["hausdorff"] = ser.rows()
        E = levelsets.shape_from_levelset(ctx["traj"], lam)
        if E.is_empty:
            return {"empty_shape": True, "final": float(ser.distances[-1]) if len(ser.distances) else None}
        if E.contours:
            bundle.shapes["measured"] = E.to_polygon().vertices
        return {"empty_shape": False, "final": float(ser.distances[-1]), "windowed": window is not None,
                "decreasing_tail": ser.decreasing_tail(min(5, len(ser.distances)))}

    def st_omega():
        dirs, speeds = ctx["speeds"]
        planar = fronts.planar_front_shooting(m.reaction) if m.homogeneous else None
        if planar is None:
            raise FrontlabError("omega fits need tabulated profiles; only homogeneous media are automated")
        e = np.asarray(_floats(s.analysis.get("ray", "1,0")))
        e = e / np.linalg.norm(e)
        angles = np.arctan2(e[1], e[0]) + np.linspace(-np.pi / 8, np.pi / 8, 9)
        cands = [fronts.planar_profile_for([math.cos(a), math.sin(a)], planar) for a in angles]
        rows = omega.omega_report(ctx["traj"], e, cands, radius=float(s.analysis.get("window", 8.0)))
        bundle.series["omega"] = [{"t": r.t, "x": float(r.x[0]), "y": float(r.x[1]), "nu_x": float(r.nu[0]),
                                   "nu_y": float(r.nu[1]), "residual": r.residual, "class": r.cls} for r in rows]
        return {"windows": len(rows), "final_residual": rows[-1].residual if rows else None}

    def st_cones():
        E = levelsets.shape_from_levelset(ctx["traj"], float(s.analysis.get("level", 0.5)))
        if E.is_empty:
            raise FrontlabError("empty invasion shape")
        poly = E.to_polygon()
        gamma = measured_gamma(ctx["traj"])
        rep = wulff.cone_conditions_check(poly, gamma, poly.boundary_samples(16), tol=2 * E.spacing)
        return {"gamma": gamma, "worst_margin": rep.worst_margin, "passed": rep.passed}

    def st_eigen():
        e = np.asarray(_floats(s.analysis.get("eigen_direction", "1,0"))[:m.dim])
        e = e / np.linalg.norm(e)
        k0 = principal_eigenvalue(m, e, 0.0).k
        rep = slope_check(m, e, [0.2, 0.1, 0.05])
        bundle.series["eigen"] = rep.rows()
        return {"k0": k0, "slope_passed": rep.passed}

    for name, fn in (("validate", st_validate), ("simulate", st_simulate), ("speeds", st_speeds),
                     ("wulff", st_wulff), ("hausdorff", st_hausdorff), ("omega", st_omega),
                     ("cones", st_cones), ("eigen", st_eigen)):
        if name in s.stages:
            run(name, fn)
    if out_dir is not None:
        emit_report(bundle, out_dir)
        if "traj" in ctx:
            path = os.path.join(out_dir, s.name, "simulate", "final.npz")
            os.makedirs(os.path.dirname(path), exist_ok=True)
            bundle.artifacts.append(save_snapshot(ctx["traj"].fields[-1], path))
    return bundle


def measured_gamma(traj, level=0.9):
    """Spreading rate ``gamma``: inradius of ``{u > level}`` about the origin divided by the final time."""
    E = levelsets.shape_from_levelset(traj, level)
    return levelsets.inradius(E)


# ---------------------------------------------------------------------------
# reports


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def summary_json(bundle: ReportBundle):
    doc = {"config": bundle.scenario.resolved() if bundle.scenario is not None else {},
           "stages": bundle.summary, "skipped": bundle.skipped}
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def svg_shapes(shapes, size=480):
    """Minimal SVG with one closed polyline per shape (the first is drawn dashed)."""
    pts = [np.asarray(v, float) for v in shapes.values() if len(v)]
    if not pts:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}"/>\n'
    allp = np.concatenate(pts)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    scale = 0.9 * size / max(float(np.max(hi - lo)), 1e-12)
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    for i, (name, v) in enumerate(shapes.items()):
        v = np.asarray(v, float)
        if not len(v):
            continue
        xy = (v - lo) * scale + 0.05 * size
        xy[:, 1] = size - xy[:, 1]
        path = " ".join(f"{x:.2f},{y:.2f}" for x, y in xy)
        dash = ' stroke-dasharray="6,4"' if i == 0 else ""
        out.append(f'  <polygon points="{path}" fill="none" stroke="{colors[i % 4]}" stroke-width="1.5"{dash}>'
                   f"<title>{name}</title></polygon>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_csv(rows, path):
    keys = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=keys)
        wr.writeheader()
        for r in rows:
            wr.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in r.items()})
    return path


def emit_report(bundle: ReportBundle, out_dir, formats=("json", "csv", "svg")):
    """Write ``<out>/<scenario>/report/summary.json``, per-stage CSV series and ``shape.svg``."""
    name = bundle.scenario.name if bundle.scenario is not None else "empty"
    base = os.path.join(out_dir, name)
    written = []
    if "json" in formats:
        path = os.path.join(base, "report", "summary.json")
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(summary_json(bundle))
        written.append(path)
    if "csv" in formats:
        for stage, rows in bundle.series.items():
            path = os.path.join(base, stage, f"{stage}.csv")
            os.makedirs(os.path.dirname(path), exist_ok=True)
            written.append(write_csv(rows, path))
    if "svg" in formats and bundle.shapes:
        path = os.path.join(base, "report", "shape.svg")
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w") as fh:
            fh.write(svg_shapes(bundle.shapes))
        written.append(path)
    bundle.artifacts.extend(written)
    return written


def acceptance(suite_name="all", tolerances=None, verbose=False):
    """Run registered acceptance criteria; see :mod:`frontlab.acceptance`."""
    from frontlab.acceptance import run_suite
    return run_suite(suite_name, tolerances, verbose=verbose)
