"""Acceptance criteria A1-A10 as runnable suites with a pass/fail table."""

import functools
import time
from dataclasses import dataclass, field

import numpy as np

from frontlab import fronts, levelsets, omega, wulff
from frontlab.eigen import principal_eigenvalue, slope_check
from frontlab.errors import ConfigError
from frontlab.geometry import unit_circle
from frontlab.harness import cone_datum, measured_gamma
from frontlab.medium import PeriodicMedium, ReactionSpec, homogeneous_medium, validate_medium
from frontlab.solver import Grid, GridField, Stepper, ball_datum, simulate, stable_dt

CUBIC = ReactionSpec.bistable(0.25)

DEFAULT_TOLERANCES = {
    "A1.speed_rel": 0.02,
    "A1.runtime": 60.0,
    "A2.k0": 1e-10,
    "A2.runtime": 10.0,
    "A3.radius": 1e-12,
    "A3.runtime": 1.0,
    "A4.final_rel": 0.1,
    "A4.level_gap": 0.05,
    "A4.runtime": 600.0,
    "A5.ratio_rel": 0.05,
    "A5.fg_rel": 0.05,
    "A5.runtime": 900.0,
    "A6.hausdorff_rel": 0.15,
    "A6.runtime": 1200.0,
    "A7.front": 0.05,
    "A7.bulk": 0.02,
    "A8.violation": 1e-12,
    "A9.oscillation": 1.0,
    "A9.speed_rel": 0.03,
}


@dataclass
class CriterionResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    runtime: float = 0.0

    def line(self):
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"{self.name} {'PASS' if self.passed else 'FAIL'} [{self.runtime:.1f}s] {shown}"

    def as_dict(self):
        return {"name": self.name, "passed": bool(self.passed), "metrics": self.metrics}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.4g}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def resolve_tolerances(overrides=None):
    tol = dict(DEFAULT_TOLERANCES)
    for key, value in (overrides or {}).items():
        if key not in tol:
            raise ConfigError(f"unknown tolerance {key!r}")
        try:
            v = float(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"tolerance {key!r} is not a number") from exc
        if not np.isfinite(v) or v <= 0:
            raise ConfigError(f"tolerance {key!r} must be positive")
        tol[key] = v
    return tol


@functools.lru_cache(maxsize=None)
def shooting_speed():
    return fronts.planar_front_shooting(CUBIC)


# ---------------------------------------------------------------------------
# shared long runs


A4_RHO = 7.0
A4_TIMES = (40.0, 60.0, 70.0, 80.0, 90.0, 100.0)


@functools.lru_cache(maxsize=None)
def compact_run():
    """Homogeneous cubic, ``1_{B_7}`` on a 401^2 grid over ``[-50, 50]^2`` up to ``t = 100``."""
    m = homogeneous_medium(CUBIC, 2)
    grid = Grid.box(50.0, 0.25, 2)
    return simulate(m, ball_datum(grid, 1.0, A4_RHO), 100.0, A4_TIMES)


def disk_target(c):
    return wulff.wulff_shape((unit_circle(64), np.full(64, c)))


# ---------------------------------------------------------------------------
# criteria


def a1(tol):
    c_shoot = shooting_speed().speed
    m = homogeneous_medium(CUBIC, 1)
    est = fronts.pulsating_front_speed(m, [1.0], h=0.02, T=150.0, length=200.0)
    rel = abs(est.speed - c_shoot) / c_shoot
    return rel <= tol["A1.speed_rel"], {"c_shoot": c_shoot, "c_sim": est.speed, "rel_err": rel}


def a2(tol):
    m = PeriodicMedium.from_catalog(2, CUBIC, "identity", "cellular", drift_params={"beta": 2.0})
    rep = validate_medium(m)
    e = np.array([1.0, 0.0])
    k0 = principal_eigenvalue(m, e, 0.0).k
    slope = slope_check(m, e, [0.2, 0.1, 0.05])
    r = slope.ratios
    ok = (rep["divergence-free"].passed and rep["zero-average"].passed and abs(k0) <= tol["A2.k0"]
          and bool(np.all(np.diff(r) < 0)) and r[-1] <= 0.5 * r[0])
    return ok, {"k0": k0, "ratios": r}


def a3(tol):
    W = wulff.wulff_shape((unit_circle(64), np.ones(64)), n_eval=256)
    err = float(np.max(np.abs(W.radii - 1.0)))
    return err <= tol["A3.radius"], {"max_dev": err, "n_eval": len(W.radii)}


def a4(tol):
    c = shooting_speed().speed
    traj = compact_run()
    target = disk_target(c)
    s5 = levelsets.rescaled_convergence(traj, 0.5, target)
    s2 = levelsets.rescaled_convergence(traj, 0.25, target)
    s7 = levelsets.rescaled_convergence(traj, 0.75, target)
    last5 = s5.distances[-5:]
    gap = abs(s2.distances[-1] - s7.distances[-1])
    ok = bool(np.all(np.diff(last5) < 0)) and last5[-1] < tol["A4.final_rel"] * c and gap <= tol["A4.level_gap"]
    return ok, {"d_over_c": last5 / c, "level_gap": gap}


def a5(tol):
    c1 = shooting_speed().speed
    A = np.diag([1.0, 4.0])
    m = PeriodicMedium.from_catalog(2, CUBIC, "diagonal", diffusion_params={"d": [1.0, 4.0]})
    grid = Grid((-50.0, -90.0), (401, 721), 0.25)
    T = 100.0
    traj = simulate(m, ball_datum(grid, 1.0, A4_RHO, metric=A), T, [T])
    E = levelsets.shape_from_levelset(traj, 0.5)
    poly = E.to_polygon()
    r = np.linalg.norm(poly.ray_hits(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])), axis=1)
    ratio = 0.5 * (r[2] + r[3]) / (0.5 * (r[0] + r[1]))
    dirs = unit_circle(64)
    speeds = c1 * np.sqrt(np.einsum("ij,jk,ik->i", dirs, A, dirs))
    fg = wulff.regular_fg_check(poly, (dirs, speeds), boundary_samples=32, normal_span=0.05 * c1)
    ok = abs(ratio - 2.0) / 2.0 <= tol["A5.ratio_rel"] and fg.max_residual < tol["A5.fg_rel"] * c1
    return ok, {"semiaxis_ratio": ratio, "fg_max_over_c": fg.max_residual / c1}


def cone_run(alpha=-1.0, T=80.0):
    m = homogeneous_medium(CUBIC, 2)
    grid = Grid((-90.0, -70.0), (721, 661), 0.25)
    u0 = GridField(grid, cone_datum(grid.points(), alpha))
    return simulate(m, u0, T, [40.0, 60.0, T])


def _top_boundary(poly, xs, floor):
    pts = []
    for x in xs:
        hit = poly.ray_hits(np.array([[0.0, 1.0]]), center=(x, floor))[0]
        pts.append(hit)
    return np.array(pts)


def a6(tol):
    c = shooting_speed().speed
    traj = cone_run()
    target = wulff.shifted_shape("cone", c, alpha=-1.0)
    window = levelsets.window_box(target.apex, 2.0 * c)
    ser = levelsets.rescaled_convergence(traj, 0.5, target, window=window)
    d = float(ser.distances[-1])
    E = levelsets.shape_from_levelset(traj, 0.5)
    poly = E.to_polygon()
    xs = np.linspace(-2.0 * c, 2.0 * c, 16)
    z = _top_boundary(poly, xs, window[0][1])
    probes = [wulff.ball_condition_probe(poly, p, 0.5 * c, tol=2.0 * E.spacing) for p in z]
    n_both = sum(p.interior and p.exterior for p in probes)
    ok = d < tol["A6.hausdorff_rel"] * c and n_both == len(z)
    return ok, {"d_over_c": ser.distances / c, "probes_passed": n_both}


def a7(tol):
    planar = shooting_speed()
    traj = compact_run()
    e = np.array([1.0, 0.0])
    angles = np.linspace(-np.pi / 8, np.pi / 8, 17)
    cands = [fronts.planar_profile_for([np.cos(a), np.sin(a)], planar) for a in angles]
    pts, _ = omega.ray_tracker(traj, e)
    res = []
    for t, x in pts:
        if t in (40.0, 60.0, 80.0):
            res.append(omega.front_fit(omega.Window.from_field(traj.at(t), x, 4.0), cands).residual)
    snap = traj.at(80.0)
    one = omega.front_fit(omega.Window.from_field(snap, [0.0, 0.0], 4.0), cands)
    zero = omega.front_fit(omega.Window.from_field(snap, [1.5 * planar.speed * 80.0, 0.0], 4.0), cands)
    res = np.array(res)
    ok = (len(res) == 3 and bool(np.all(np.diff(res) < 0)) and res[-1] < tol["A7.front"]
          and one.classification == "bulk-1" and one.bulk_one < tol["A7.bulk"]
          and zero.classification == "bulk-0" and zero.bulk_zero < tol["A7.bulk"])
    return ok, {"residuals": res, "bulk1": one.bulk_one, "bulk0": zero.bulk_zero}


def a8(tol, n_pairs=100, seed=0):
    m = PeriodicMedium.from_catalog(2, ReactionSpec.periodic_bistable(0.25, 0.1), "identity", "cellular",
                                    drift_params={"beta": 1.0})
    grid = Grid.box(4.0, 0.25, 2)
    dt = min(stable_dt(m, grid.h), 0.05)
    stepper = Stepper(m, grid, dt)
    rng = np.random.default_rng(seed)
    worst = -np.inf
    out_of_range = 0.0
    for _ in range(n_pairs):
        u = rng.random(grid.shape)
        touch = rng.random(grid.shape) < 0.5  # pairs coincide on about half the nodes
        v = u + np.where(touch, 0.0, rng.random(grid.shape) * (1.0 - u))
        for k in range(1, 101):
            u, v = stepper(u), stepper(v)
            if k % 20 == 0:
                worst = max(worst, float(np.max(u - v)))
                out_of_range = max(out_of_range, float(np.max(-u)), float(np.max(v - 1.0)))
    return worst <= tol["A8.violation"], {"max_violation": worst, "range_excess": out_of_range}


def a9(tol):
    m = PeriodicMedium.from_catalog(2, ReactionSpec.periodic_bistable(0.25, 0.1))
    e = np.array([1.0, 0.0])
    coarse = fronts.pulsating_front_speed(m, e, h=0.1, T=80.0)
    fine = fronts.pulsating_front_speed(m, e, h=0.05, T=80.0, keep_trajectory=True)
    rel = abs(coarse.speed - fine.speed) / fine.speed
    prof = fronts.extract_front_profile(fine.medium, e, fine.speed, fine.trajectory, t_min=40.0)
    C, lam0 = prof.decay
    flat = prof.table.reshape(-1, prof.z.size)
    tail = flat.max(axis=0) < 1e-3
    tail &= prof.z > 0
    bound = bool(np.all(flat[:, tail] <= C * np.exp(-lam0 * prof.z[tail]) * (1 + 1e-9)))
    mono = fronts.profile_monotone(prof)
    ok = (max(coarse.oscillation, fine.oscillation) <= tol["A9.oscillation"] and rel <= tol["A9.speed_rel"]
          and mono and lam0 > 0 and bound)
    return ok, {"c_h": coarse.speed, "c_h2": fine.speed, "rel": rel, "oscillation": fine.oscillation,
                "monotone": mono, "lambda0": lam0, "tail_bound": bound}


def a10(tol):
    traj = compact_run()
    E = levelsets.shape_from_levelset(traj, 0.5)
    poly = E.to_polygon()
    gamma = measured_gamma(traj)
    z = poly.boundary_samples(16)
    rep = wulff.cone_conditions_check(poly, gamma, z, (0.25, 0.5, 0.75, 1.5, 2.0), tol=2.0 * E.spacing)
    return rep.passed, {"gamma": gamma, "worst_margin": rep.worst_margin}


CRITERIA = {"A1": a1, "A2": a2, "A3": a3, "A4": a4, "A5": a5, "A6": a6, "A7": a7, "A8": a8, "A9": a9, "A10": a10}
ALIASES = {"A1-front-speed": "A1", "A2-eigen-slope": "A2", "A3-disk": "A3", "A4-hausdorff": "A4",
           "A5-ellipse": "A5", "A6-cone": "A6", "A7-omega": "A7", "A8-comparison": "A8",
           "A9-pulsating": "A9", "A10-cone-conditions": "A10"}
RUNTIME_LIMITS = {"A1": "A1.runtime", "A2": "A2.runtime", "A3": "A3.runtime", "A4": "A4.runtime",
                  "A5": "A5.runtime", "A6": "A6.runtime"}


def run_criterion(name, tolerances=None):
    key = ALIASES.get(name, name)
    if key not in CRITERIA:
        raise ConfigError(f"unknown acceptance suite {name!r}")
    tol = resolve_tolerances(tolerances)
    t0 = time.perf_counter()
    ok, metrics = CRITERIA[key](tol)
    dt = time.perf_counter() - t0
    if key in RUNTIME_LIMITS:
        limit = tol[RUNTIME_LIMITS[key]]
        metrics["runtime_ok"] = dt <= limit
        ok = ok and dt <= limit
    return CriterionResult(key, bool(ok), metrics, dt)


def run_suite(suite_name="all", tolerances=None, verbose=False):
    resolve_tolerances(tolerances)
    names = list(CRITERIA) if suite_name == "all" else [s.strip() for s in suite_name.split(",")]
    out = []
    for n in names:
        res = run_criterion(n, tolerances)
        if verbose:
            print(res.line(), flush=True)
        out.append(res)
    return out
