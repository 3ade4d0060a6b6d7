"""Space-time windows along rays and their fit against pulsating fronts."""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import minimize_scalar

from frontlab.errors import DomainError, InsufficientDataError

FRONT_TOL = 0.05
BULK_TOL = 0.02


@dataclass
class Window:
    """Values ``u(t, x + y)`` at grid nodes with ``|y| <= radius``; ``x`` is a grid node."""

    t: float
    center: np.ndarray
    radius: float
    offsets: np.ndarray
    values: np.ndarray

    @classmethod
    def from_field(cls, u, center, radius):
        g = u.grid
        c = np.asarray(center, dtype=float)
        idx = np.rint((c - np.asarray(g.lower)) / g.h).astype(int)
        node = np.asarray(g.lower) + idx * g.h
        k = int(np.floor(radius / g.h + 1e-9))
        lo, hi = idx - k, idx + k
        if np.any(lo < 0) or np.any(hi >= np.asarray(g.shape)):
            raise DomainError("window does not fit inside the domain")
        sl = tuple(slice(a, b + 1) for a, b in zip(lo, hi))
        rng = np.arange(-k, k + 1) * g.h
        offs = np.stack(np.meshgrid(*[rng] * g.dim, indexing="ij"), axis=-1)
        vals = u.values[sl]
        keep = np.linalg.norm(offs, axis=-1) <= radius + 1e-12
        return cls(u.t, node, float(radius), offs[keep], vals[keep])

    @property
    def points(self):
        return self.center + self.offsets


@dataclass
class FitResult:
    direction: np.ndarray
    time_shift: float
    cell_shift: np.ndarray
    residual: float
    bulk_one: float
    bulk_zero: float
    candidate: int

    @property
    def bulk_residual(self):
        return min(self.bulk_one, self.bulk_zero)

    @property
    def classification(self):
        if self.bulk_residual < BULK_TOL:
            return "bulk-1" if self.bulk_one <= self.bulk_zero else "bulk-0"
        if self.residual < FRONT_TOL:
            return "front"
        return "unresolved"


def _objective(profile, pts, vals, y, s):
    return float(np.max(np.abs(vals - profile.reconstruct(s, pts + y))))


def _fit_one(w, profile, h):
    nu, c = profile.direction, profile.speed
    pts, vals = w.points, w.values
    if np.all(np.array(profile.cell_shape) == 1):
        shifts = [np.zeros(w.center.size)]
    else:
        n = max(1, int(round(1.0 / h)))
        g1 = np.arange(n) * h
        shifts = [np.array(s) for s in np.stack(np.meshgrid(*[g1] * w.center.size, indexing="ij"), -1).reshape(-1, w.center.size)]
    s_mid = float(w.center @ nu) / c
    ds = 0.1 / c
    span = (w.radius + 5.0) / c  # the crossing must sit in or near the window
    s_grid = s_mid + np.arange(-span, span + ds, ds)
    best = (np.inf, 0.0, shifts[0])
    for y in shifts:
        for s in s_grid:
            r = _objective(profile, pts, vals, y, s)
            if r < best[0]:
                best = (r, s, y)
    r0, s0, y0 = best
    res = minimize_scalar(lambda s: _objective(profile, pts, vals, y0, s), bracket=None,
                          bounds=(s0 - ds, s0 + ds), method="bounded", options={"xatol": 1e-6 / c})
    if res.fun < r0:
        r0, s0 = float(res.fun), float(res.x)
    return r0, s0, y0


def front_fit(w: Window, candidates, h=None):
    """Best pulsating-front fit of a window over candidate profiles, time shifts and cell shifts.

    Coarse scan (time step ``0.1 / c``, cell step ``h``) followed by bounded
    golden-section refinement of the time shift. Constant-state residuals are
    reported alongside for the bulk classification.
    """
    cands = list(candidates)
    if not cands:
        raise DomainError("no candidate profiles")
    if w.radius < 1.0:
        raise InsufficientDataError("window radius must span at least one period")
    if any(p.speed <= 0 for p in cands):
        raise DomainError("candidate speeds must be positive")
    if h is None:
        d = np.abs(w.offsets[w.offsets != 0])
        h = float(d.min()) if d.size else 0.1
    best = None
    for i, p in enumerate(cands):
        r, s, y = _fit_one(w, p, h)
        if best is None or r < best[0]:
            best = (r, s, y, i)
    r, s, y, i = best
    return FitResult(cands[i].direction.copy(), s, y, r, float(np.max(np.abs(w.values - 1.0))),
                     float(np.max(np.abs(w.values))), i)


def ray_tracker(traj, e, lam=0.5, step=None):
    """Largest ``lam``-crossing of each snapshot along the ray ``{s e : s > 0}``.

    Returns ``(points, skipped)``: a list of ``(t, x)`` and the times without a
    crossing.
    """
    e = np.asarray(e, dtype=float)
    if abs(np.linalg.norm(e) - 1.0) > 1e-9:
        raise DomainError("direction must be a unit vector")
    out, skipped = [], []
    for snap in traj:
        g = snap.grid
        axes = [g.axis(k) for k in range(g.dim)]
        interp = RegularGridInterpolator(axes, snap.values)
        ds = 0.5 * g.h if step is None else step
        lo, hi = np.asarray(g.lower, float), np.asarray(g.upper, float)
        with np.errstate(divide="ignore"):
            lim = np.where(e > 0, hi / np.where(e > 0, e, 1), np.where(e < 0, lo / np.where(e < 0, e, 1), np.inf))
        smax = float(np.min(lim))
        s = np.arange(0.0, smax, ds)
        u = interp(s[:, None] * e[None, :])
        above = np.flatnonzero(u > lam)
        if above.size == 0 or above[-1] == len(s) - 1:
            skipped.append(snap.t)
            continue
        i = above[-1]
        sc = s[i] + (u[i] - lam) / (u[i] - u[i + 1]) * ds
        out.append((snap.t, sc * e))
    return out, skipped


@dataclass
class OmegaRow:
    t: float
    x: np.ndarray
    nu: np.ndarray
    residual: float
    cls: str


def omega_report(traj, e, candidates, radius=8.0, lam=0.5, times=None):
    """Front fits of windows centred on the ray crossings."""
    pts, _ = ray_tracker(traj, e, lam)
    rows = []
    for t, x in pts:
        if times is not None and not np.any(np.isclose(t, times)):
            continue
        w = Window.from_field(traj.at(t), x, radius)
        fit = front_fit(w, candidates)
        rows.append(OmegaRow(t, w.center, fit.direction, fit.residual, fit.classification))
    return rows


def write_omega_csv(rows, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t_n", "x_n", "y_n", "nu_x", "nu_y", "residual", "class"])
        for r in rows:
            wr.writerow([f"{r.t:.6g}", f"{r.x[0]:.6g}", f"{r.x[1]:.6g}", f"{r.nu[0]:.6g}", f"{r.nu[1]:.6g}",
                         f"{r.residual:.6g}", r.cls])
    return path


@dataclass
class CornerReport:
    minimizers: np.ndarray
    times: np.ndarray
    residuals: np.ndarray  # (n_times, n_minimizers)

    def dominant(self):
        return np.argmin(self.residuals, axis=1)

    def best_per_minimizer(self):
        return self.residuals.min(axis=0)


def corner_direction_scan(traj, e, minimizers, profiles, radius=8.0, lam=0.5, times=None):
    """Fit windows along ``e`` separately against each minimiser's profile.

    ``profiles`` is a sequence aligned with ``minimizers`` or a callable
    ``xi -> FrontProfile``.
    """
    mins = np.atleast_2d(np.asarray(minimizers, dtype=float))
    if mins.size == 0:
        raise DomainError("empty minimiser set")
    profs = [profiles(xi) for xi in mins] if callable(profiles) else list(profiles)
    if len(profs) != len(mins):
        raise DomainError("one profile per minimiser is required")
    pts, _ = ray_tracker(traj, e, lam)
    ts, res = [], []
    for t, x in pts:
        if times is not None and not np.any(np.isclose(t, times)):
            continue
        w = Window.from_field(traj.at(t), x, radius)
        ts.append(t)
        res.append([front_fit(w, [p]).residual for p in profs])
    return CornerReport(mins, np.array(ts), np.array(res).reshape(len(ts), len(profs)))
