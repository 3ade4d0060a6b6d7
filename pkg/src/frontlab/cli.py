"""Command line: ``python -m frontlab <subcommand>``."""

import argparse
import csv
import json
import os
import sys

import numpy as np

from frontlab import fronts, harness, levelsets, omega, wulff
from frontlab.eigen import eigenfunction_residual, principal_eigenvalue
from frontlab.errors import FrontlabError
from frontlab.solver import save_snapshot, simulate


def _direction(text, dim):
    v = np.array([float(x) for x in text.split(",")])[:dim]
    return v / np.linalg.norm(v)


def _emit(doc, out=None):
    text = json.dumps(harness._clean(doc), sort_keys=True, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def cmd_simulate(args):
    s = harness.Scenario.load(args.config)
    m = s.build_medium()
    grid = s.build_grid()
    traj = simulate(m, s.initial_datum(grid), s.T, s.output_times, boundary=s.boundary())
    os.makedirs(args.out, exist_ok=True)
    ext = "csv" if args.format == "csv" else "npz"
    for snap in traj:
        save_snapshot(snap, os.path.join(args.out, f"u_t{snap.t:08.3f}.{ext}"))
    with open(os.path.join(args.out, "config.json"), "w") as fh:
        json.dump(s.resolved(), fh, sort_keys=True, indent=2)
    print(f"wrote {len(traj)} snapshots to {args.out}")
    return 0


def cmd_front_speed(args):
    s = harness.Scenario.load(args.config)
    m = s.build_medium()
    e = _direction(args.direction, m.dim)
    est = fronts.pulsating_front_speed(m, e, h=args.h, T=args.T, keep_trajectory=True)
    doc = {"c": est.speed, "oscillation": est.oscillation, "direction": est.direction}
    try:
        de = np.array([est.strip["p"], est.strip["q"]], float)[:m.dim]
        prof = fronts.extract_front_profile(est.medium, de / np.linalg.norm(de), est.speed, est.trajectory,
                                            t_min=0.5 * est.strip["T"])
        doc["C"], doc["lambda0"] = prof.decay
    except FrontlabError as exc:
        doc["C"] = doc["lambda0"] = None
        doc["profile_error"] = str(exc)
    _emit(doc, args.out)
    return 0


def cmd_front_profile(args):
    s = harness.Scenario.load(args.config)
    m = s.build_medium()
    e = _direction(args.direction, m.dim)
    if m.homogeneous and m.dim == 1 or args.shooting:
        prof = fronts.planar_front_shooting(m.reaction).profile
    else:
        est = fronts.pulsating_front_speed(m, e, h=args.h, T=args.T, keep_trajectory=True)
        de = np.array([est.strip["p"], est.strip["q"]], float)[:m.dim]
        prof = fronts.extract_front_profile(est.medium, de / np.linalg.norm(de), est.speed, est.trajectory,
                                            t_min=0.5 * est.strip["T"])
    flat = prof.table.reshape(-1, prof.z.size)
    shape = prof.cell_shape
    with open(args.out, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x_cell", "z", "U"])
        for i, row in enumerate(flat):
            idx = np.unravel_index(i, shape)
            cell = ";".join(f"{k / n:.6g}" for k, n in zip(idx, shape))
            for z, u in zip(prof.z, row):
                wr.writerow([cell, f"{z:.6g}", f"{u:.10g}"])
    print(f"wrote profile ({flat.shape[0]} cell positions, {prof.z.size} z values) to {args.out}")
    return 0


def cmd_eigen(args):
    s = harness.Scenario.load(args.config)
    m = s.build_medium()
    e = _direction(args.direction, m.dim)
    pair = principal_eigenvalue(m, e, args.lam)
    _emit({"k": pair.k, "residual": eigenfunction_residual(pair, m), "iterations": pair.iterations})
    return 0


def _read_speeds(path):
    dirs, speeds = [], []
    with open(path) as fh:
        for row in csv.DictReader(fh):
            dirs.append([float(row["ex"]), float(row.get("ey", 0.0) or 0.0)])
            speeds.append(float(row["speed"]))
    return np.array(dirs), np.array(speeds)


def cmd_wulff(args):
    dirs, speeds = _read_speeds(args.speeds)
    W = wulff.wulff_shape((dirs, speeds), n_eval=args.n_eval)
    with open(args.out, "w") as fh:
        json.dump(harness._clean(W.as_dict()), fh)
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(harness.svg_shapes({"wulff": W.vertices}))
    print(f"w in [{W.radii.min():.6g}, {W.radii.max():.6g}]; wrote {args.out}")
    return 0


def cmd_verify(args):
    s = harness.Scenario.load(args.config)
    stages = {"hausdorff": "speeds,wulff,hausdorff", "omega": "speeds,omega", "cones": "cones"}[args.check]
    s.analysis["stages"] = stages
    bundle = harness.run_scenario(s, args.out)
    if args.check == "omega" and args.out:
        rows = bundle.series.get("omega", [])
        path = os.path.join(args.out, s.name, "omega", "omega.csv")
        os.makedirs(os.path.dirname(path), exist_ok=True)
        omega.write_omega_csv([omega.OmegaRow(r["t"], np.array([r["x"], r["y"]]), np.array([r["nu_x"], r["nu_y"]]),
                                              r["residual"], r["class"]) for r in rows], path)
    print(harness.summary_json(bundle))
    return 0 if bundle.complete else 1


def cmd_acceptance(args):
    tol = {}
    if args.tolerances:
        import configparser
        cfg = configparser.ConfigParser()
        cfg.optionxform = str
        cfg.read(args.tolerances)
        tol = dict(cfg["tolerances"]) if cfg.has_section("tolerances") else {}
    results = harness.acceptance(args.suite, tol, verbose=True)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(harness._clean([r.as_dict() for r in results]), fh, sort_keys=True, indent=2)
    return 0 if all(r.passed for r in results) else 1


def cmd_report(args):
    s = harness.Scenario.load(args.config)
    bundle = harness.run_scenario(s, args.out)
    for path in bundle.artifacts:
        print(path)
    return 0 if bundle.complete else 1


def build_parser():
    p = argparse.ArgumentParser(prog="frontlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("simulate", help="integrate a scenario and dump snapshots")
    q.add_argument("--config", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--format", choices=("npz", "csv"), default="npz")
    q.set_defaults(func=cmd_simulate)

    for name, fn in (("front-speed", cmd_front_speed), ("front-profile", cmd_front_profile)):
        q = sub.add_parser(name)
        q.add_argument("--config", required=True)
        q.add_argument("--direction", default="1,0")
        q.add_argument("--h", type=float, default=0.1)
        q.add_argument("--T", type=float, default=None)
        q.add_argument("--out", default=None if name == "front-speed" else "profile.csv")
        if name == "front-profile":
            q.add_argument("--shooting", action="store_true", help="use the 1D shooting profile")
        q.set_defaults(func=fn)

    q = sub.add_parser("eigen")
    q.add_argument("--config", required=True)
    q.add_argument("--direction", default="1,0")
    q.add_argument("--lambda", dest="lam", type=float, required=True)
    q.set_defaults(func=cmd_eigen)

    q = sub.add_parser("wulff")
    q.add_argument("--speeds", required=True, help="CSV with columns ex, ey, speed")
    q.add_argument("--out", default="shape.json")
    q.add_argument("--svg", default=None)
    q.add_argument("--n-eval", type=int, default=512)
    q.set_defaults(func=cmd_wulff)

    q = sub.add_parser("verify")
    q.add_argument("check", choices=("hausdorff", "omega", "cones"))
    q.add_argument("--config", required=True)
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_verify)

    q = sub.add_parser("acceptance")
    q.add_argument("--suite", default="all")
    q.add_argument("--tolerances", default=None, help="INI file with a [tolerances] section")
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_acceptance)

    q = sub.add_parser("report")
    q.add_argument("--config", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FrontlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
