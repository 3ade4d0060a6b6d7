"""Planar and pulsating fronts: speeds, profiles and diagnostics."""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from frontlab.errors import (DomainError, DomainTooSmallError, InsufficientDataError,
                             NoFrontError, StructuralError)
from frontlab.medium import PeriodicMedium, ReactionSpec, transform_medium
from frontlab.solver import Grid, GridField, discretize, simulate

LEVEL = 0.5


# ---------------------------------------------------------------------------
# profiles


@dataclass
class FrontProfile:
    """Tabulated pulsating profile ``U(x, z)``; ``table`` has shape ``cell_shape + (nz,)``.

    Homogeneous profiles use ``cell_shape == (1,) * N``. Beyond ``z[-1]`` the
    profile follows ``C exp(-lambda0 z)``; below ``z[0]`` it is held constant.
    """

    direction: np.ndarray
    speed: float
    z: np.ndarray
    table: np.ndarray
    mu: float = LEVEL
    decay: tuple = (np.nan, np.nan)  # (C, lambda0)
    _splines: Optional[list] = field(default=None, repr=False)

    @property
    def dim(self):
        return self.direction.size

    @property
    def cell_shape(self):
        return self.table.shape[:-1]

    def cell_average(self):
        return self.table.reshape(-1, self.z.size).mean(axis=0)

    def _cell_index(self, x):
        x = np.asarray(x, dtype=float)
        idx = []
        for k, nk in enumerate(self.cell_shape):
            frac = x[..., k] - np.floor(x[..., k])
            idx.append(np.floor(frac * nk + 0.5).astype(int) % nk if nk > 1 else np.zeros(x.shape[:-1], int))
        return tuple(idx)

    def _spline_rows(self):
        if self._splines is None:
            flat = self.table.reshape(-1, self.z.size)
            self._splines = [CubicSpline(self.z, row) for row in flat]
        return self._splines

    def __call__(self, x, z):
        """Evaluate ``U(x, z)``; ``x`` has shape ``(..., N)`` and ``z`` shape ``(...)``."""
        z = np.asarray(z, dtype=float)
        x = np.broadcast_to(np.asarray(x, dtype=float), z.shape + (self.dim,))
        flat_cell = np.ravel_multi_index(self._cell_index(x), self.cell_shape)
        out = np.empty(z.shape)
        splines = self._spline_rows()
        zc = np.clip(z, self.z[0], self.z[-1])
        for c in np.unique(flat_cell):
            sel = flat_cell == c
            out[sel] = splines[c](zc[sel])
        C, lam0 = self.decay
        tail = z > self.z[-1]
        if np.any(tail):
            if np.isfinite(lam0):
                last = np.take(self.table.reshape(-1, self.z.size)[:, -1], flat_cell[tail])
                out[tail] = last * np.exp(-lam0 * (z[tail] - self.z[-1]))
            else:
                out[tail] = np.take(self.table.reshape(-1, self.z.size)[:, -1], flat_cell[tail])
        return out

    def reconstruct(self, t, x):
        """Pulsating front ``phi(t, x) = U(x, x.e - c t)``."""
        x = np.asarray(x, dtype=float)
        return self(x, x @ self.direction - self.speed * t)


@dataclass
class PlanarFront:
    speed: float
    profile: FrontProfile
    brackets: int


def _decay_rate(f, c):
    """Exponential decay rate at 0 of the front tail: root of mu^2 - c mu + f'(0) = 0."""
    d0 = float(f.derivative(0.0))
    return 0.5 * (c + math.sqrt(c * c - 4.0 * d0)) if c * c - 4.0 * d0 >= 0 else 0.5 * c


def _unstable_rate(f, c):
    d1 = float(f.derivative(1.0))
    return 0.5 * (-c + math.sqrt(c * c - 4.0 * d1))


def _trajectory(f, c, eps, z_max, dense=False):
    mu = _unstable_rate(f, c)
    y0 = [1.0 - eps, -eps * mu]
    alpha = f.threshold() if f.kind == "ignition" else None

    def rhs(_, y):
        return [y[1], -c * y[1] - float(f(y[0]))]

    def hit_zero(_, y):
        return y[0]
    hit_zero.terminal = True
    hit_zero.direction = -1

    def turn(_, y):
        return y[1]
    turn.terminal = True
    turn.direction = 1
    events = [hit_zero, turn]
    if alpha is not None:
        def flat_zone(_, y):
            return y[0] - alpha
        flat_zone.terminal = True
        flat_zone.direction = -1
        events.append(flat_zone)
    return solve_ivp(rhs, (0.0, z_max), y0, method="DOP853", rtol=1e-11, atol=1e-13,
                     events=events, dense_output=dense)


def _shoot(f, c, eps=1e-7, z_max=2000.0):
    """+1 if the unstable manifold of (1, 0) turns back before reaching 0 (c too large), -1 otherwise."""
    sol = _trajectory(f, c, eps, z_max)
    if sol.t_events[0].size:
        return -1
    if sol.t_events[1].size:
        return +1
    if len(sol.t_events) > 2 and sol.t_events[2].size:
        phi, psi = sol.y_events[2][0]
        # f vanishes below alpha: phi follows phi + psi (1 - exp(-c s)) / c
        return +1 if phi + psi / c > 0 else -1
    phi, psi = sol.y[:, -1]
    return +1 if phi + psi / max(c, 1e-300) > 0 else -1


def planar_front_shooting(f: ReactionSpec, tol=1e-8, dz=0.01, z_range=(-30.0, 30.0)):
    """Speed and profile of ``phi'' + c phi' + f(phi) = 0`` with ``phi(-inf) = 1``, ``phi(+inf) = 0``.

    Bisection on ``c`` with the sign of the shooting functional. Raises
    :class:`NoFrontError` when no positive speed brackets a sign change.
    """
    if not f.homogeneous or f.kind not in ("bistable", "ignition", "custom-table"):
        raise DomainError("shooting needs a homogeneous bistable, ignition or tabulated reaction")
    if float(f.derivative(1.0)) >= 0:
        raise DomainError("f'(1) must be negative")
    lo = tol
    if _shoot(f, lo) > 0:
        raise NoFrontError("no positive-speed front: the invasion property fails")
    hi = 1.0
    while _shoot(f, hi) < 0:
        hi *= 2.0
        if hi > 1e4:
            raise NoFrontError("could not bracket the front speed")
    n = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _shoot(f, mid) < 0:
            lo = mid
        else:
            hi = mid
        n += 1
    c = 0.5 * (lo + hi)
    profile = _tabulate_planar(f, c, dz, z_range)
    return PlanarFront(c, profile, n)


def _tabulate_planar(f, c, dz, z_range, eps=1e-9):
    sol = _trajectory(f, c, eps, 4000.0, dense=True)
    zz = np.linspace(sol.t[0], sol.t[-1], max(2000, int((sol.t[-1] - sol.t[0]) / (0.2 * dz))))
    phi = sol.sol(zz)[0]
    # keep the monotone heteroclinic part only
    dphi = np.diff(phi)
    stop = np.flatnonzero((dphi >= 0) | (phi[1:] <= 1e-7))
    end = stop[0] + 1 if stop.size else phi.size
    zz, phi = zz[:end], phi[:end]
    z_half = np.interp(-LEVEL, -phi, zz)
    zz = zz - z_half
    lam0 = _decay_rate(f, c)
    mu1 = _unstable_rate(f, c)
    z = np.arange(z_range[0], z_range[1] + 0.5 * dz, dz)
    u = np.interp(z, zz, phi)
    head = z < zz[0]
    u[head] = 1.0 - (1.0 - phi[0]) * np.exp(mu1 * (z[head] - zz[0]))
    tail = z > zz[-1]
    u[tail] = phi[-1] * np.exp(-lam0 * (z[tail] - zz[-1]))
    C = float(np.max(u[z >= 0] * np.exp(lam0 * z[z >= 0])))
    return FrontProfile(np.array([1.0]), c, z, u[None, :], LEVEL, (C, lam0))


def planar_profile_for(direction, planar: PlanarFront):
    """Re-home a 1D shooting profile in ``R^N`` along ``direction``."""
    e = np.asarray(direction, dtype=float)
    p = planar.profile
    return FrontProfile(e / np.linalg.norm(e), planar.speed, p.z, p.table.reshape((1,) * e.size + (-1,)),
                        p.mu, p.decay)


# ---------------------------------------------------------------------------
# pulsating fronts by long-time simulation


def _lattice_map(e):
    """Signed permutation ``T`` with ``(T e)_0 >= |(T e)_1| >= 0``."""
    e = np.asarray(e, dtype=float)
    dim = e.size
    T = np.eye(dim)
    if dim == 2 and abs(e[1]) > abs(e[0]):
        T = np.array([[0.0, 1.0], [1.0, 0.0]])
    d = T @ e
    S = np.diag([1.0 if v >= 0 else -1.0 for v in d])
    return S @ T


def rational_direction(e, max_den=8):
    """Closest lattice direction ``(p, q)/|(p, q)|`` with ``0 <= q <= p <= max_den`` after a lattice map."""
    e = np.asarray(e, dtype=float)
    if e.size == 1:
        return np.sign(e) if e[0] != 0 else np.array([1.0]), (1, 0), _lattice_map(e)
    T = _lattice_map(e)
    d = T @ e
    frac = Fraction(float(d[1] / d[0])).limit_denominator(max_den)
    p, q = frac.denominator, frac.numerator
    u = np.array([p, q], dtype=float) / math.hypot(p, q)
    return T.T @ u, (p, q), T


@dataclass
class SpeedEstimate:
    direction: np.ndarray
    speed: float
    oscillation: float
    intercept: float
    times: np.ndarray
    positions: np.ndarray
    strip: Optional[dict] = None
    trajectory: object = None
    medium: object = None

    def __iter__(self):
        return iter((self.speed, self.oscillation))


def _level_position(values, grid, e_strip, level=LEVEL):
    """Mean over rows of the largest-x crossing of ``level``, projected on the direction."""
    u = values if values.ndim == 2 else values[:, None]
    x1 = grid.axis(0)
    ys = grid.axis(1) if grid.dim == 2 else np.zeros(1)
    above = u > level
    pos = []
    edge = False
    for j in range(u.shape[1]):
        idx = np.flatnonzero(above[:, j])
        if idx.size == 0:
            return None, False
        i = idx[-1]
        if i >= u.shape[0] - 1:
            edge = True
            i = u.shape[0] - 2
        a, b = u[i, j], u[i + 1, j]
        xc = x1[i] + (a - level) / (a - b) * grid.h if a != b else x1[i]
        p = xc * e_strip[0] + (ys[j] * e_strip[1] if grid.dim == 2 else 0.0)
        pos.append(p)
    return float(np.mean(pos)), edge


def pulsating_front_speed(m: PeriodicMedium, e, h=0.1, T=None, length=None, back=15.0, ahead=20.0,
                          dt=None, snapshot_every=0.5, max_den=8, keep_trajectory=False,
                          min_cells=20, speed_guess=None, profile_window=None):
    """Speed of the pulsating front in direction ``e`` from level-set tracking.

    A step decreasing along ``e`` evolves on a strip aligned with the lattice
    direction closest to ``e``; the transverse axis is periodic with the helical
    identification that keeps ``e``-planar data invariant. ``c`` is the
    least-squares slope of the tracked position over the second half of ``[0, T]``.
    """
    e = np.atleast_1d(np.asarray(e, dtype=float))
    if e.size != m.dim or abs(np.linalg.norm(e) - 1.0) > 1e-9:
        raise DomainError("direction must be a unit vector of the medium's dimension")
    realized, (p, q), Tm = rational_direction(e, max_den)
    mm = transform_medium(m, Tm) if not np.allclose(Tm, np.eye(m.dim)) else m
    d = np.array([p, q], dtype=float) / math.hypot(p, q) if m.dim == 2 else np.array([1.0])
    guess = speed_guess if speed_guess is not None else 0.5
    if T is None:
        T = max(40.0, min_cells / guess)
    travel = 1.25 * guess * T / d[0] + 5.0
    if length is None:
        length = math.ceil(back + travel + ahead)
    n1 = int(round(length / h)) + 1
    if m.dim == 1:
        grid = Grid((0.0,), (n1,), h)
    else:
        grid = Grid((0.0, 0.0), (n1, int(round(p / h))), h, periodic=(False, True),
                    helical_shift=-int(round(q / h)))
    pts = grid.points()
    proj = pts @ d if m.dim == 2 else pts[..., 0]
    s0 = back * d[0]
    u0 = GridField(grid, np.where(proj < s0, 1.0, 0.0))
    out_times = np.arange(snapshot_every, T + 0.5 * snapshot_every, snapshot_every)
    traj = simulate(mm, u0, T, out_times, dt=dt)
    times, positions = [], []
    for snap in traj:
        pos, edge = _level_position(snap.values, grid, d)
        if pos is None:
            raise NoFrontError("the state 1 disappeared: no invading front")
        if edge:
            raise DomainTooSmallError("tracked level set reached the end of the strip")
        times.append(snap.t)
        positions.append(pos)
    times, positions = np.array(times), np.array(positions)
    sel = times >= 0.5 * T
    if sel.sum() < 3:
        raise InsufficientDataError("too few snapshots in the fit window")
    c, b = np.polyfit(times[sel], positions[sel], 1)
    if c <= 0 or positions[-1] <= positions[0]:
        raise NoFrontError(f"non-invading dynamics (fitted speed {c:.4g})")
    osc = float(np.max(np.abs(positions[sel] - c * times[sel] - b)))
    strip = {"p": p, "q": q, "lattice_map": Tm.tolist(), "grid": grid.describe(), "T": T}
    return SpeedEstimate(realized, float(c), osc, float(b), times, positions, strip,
                         traj if keep_trajectory else None, mm if keep_trajectory else None)


@dataclass
class SpeedTable:
    directions: np.ndarray
    speeds: np.ndarray
    oscillations: np.ndarray
    max_jump: float

    def as_mapping(self):
        return {tuple(np.round(d, 12)): float(c) for d, c in zip(self.directions, self.speeds)}

    def rows(self):
        return [{"ex": float(d[0]), "ey": float(d[1]), "speed": float(c), "oscillation": float(o)}
                for d, c, o in zip(self.directions, self.speeds, self.oscillations)]


def speed_table(m: PeriodicMedium, directions, **sim):
    """Pulsating speeds for each direction; ``max_jump`` is the largest ``|dc| / d(angle)``."""
    dirs = np.asarray(directions, dtype=float)
    if m.dim != 2 or dirs.ndim != 2 or dirs.shape[1] != 2:
        raise DomainError("speed tables are two-dimensional")
    if len(dirs) < 8:
        raise DomainError("need at least 8 directions")
    est = [pulsating_front_speed(m, d, **sim) for d in dirs]
    real = np.array([s.direction for s in est])
    speeds = np.array([s.speed for s in est])
    osc = np.array([s.oscillation for s in est])
    ang = np.arctan2(real[:, 1], real[:, 0])
    order = np.argsort(ang)
    a, c = ang[order], speeds[order]
    da = np.diff(np.append(a, a[0] + 2 * np.pi))
    dc = np.abs(np.diff(np.append(c, c[0])))
    jumps = np.where(da > 1e-12, dc / np.maximum(da, 1e-12), 0.0)
    return SpeedTable(real, speeds, osc, float(np.max(jumps)))


def extract_front_profile(m: PeriodicMedium, e, c, trajectory, t_min=None, cell_resolution=None,
                          dz=None, plateau_tol=1e-6, floor=1e-9, tail=(1e-8, 1e-3)):
    """Bin late snapshots by ``(x mod 1, z = x.e - c t)`` and average per bin.

    Works in the coordinates of the trajectory's grid; ``e`` is the direction in
    those coordinates. Per cell position the bin means (of ``u`` and of ``z``)
    are interpolated onto a common z-grid of spacing ``dz`` (default ``h``).
    The table is cut where the cell-averaged profile leaves ``[floor, 1 - plateau_tol]``,
    and its z-origin is the largest crossing of ``1/2``.
    """
    e = np.atleast_1d(np.asarray(e, dtype=float))
    snaps = [s for s in trajectory if t_min is None or s.t >= t_min]
    if not snaps:
        raise InsufficientDataError("no snapshots in the requested window")
    grid = snaps[0].grid
    h = grid.h
    dz = h if dz is None else dz
    mc = m.resolution if cell_resolution is None else cell_resolution
    mc = max(1, min(mc, int(round(1 / h))))
    cells_per_axis = (1,) * m.dim if m.homogeneous else (mc,) * m.dim
    pts = grid.points().reshape(-1, grid.dim)
    xe = pts @ e
    cell_idx = []
    for k, nk in enumerate(cells_per_axis):
        frac = pts[:, k] - np.floor(pts[:, k])
        cell_idx.append((np.floor(frac * nk + 0.5).astype(int) % nk) if nk > 1 else np.zeros(len(pts), int))
    flat_cell = np.ravel_multi_index(tuple(cell_idx), cells_per_axis)
    ncell = int(np.prod(cells_per_axis))
    zs = np.concatenate([xe - c * s.t for s in snaps])
    zmin, zmax = float(np.min(zs)), float(np.max(zs))
    nz = int(math.floor((zmax - zmin) / dz)) + 1
    zbin = np.floor((zs - zmin) / dz).astype(int)
    cells = np.tile(flat_cell, len(snaps))
    vals = np.concatenate([s.values.ravel() for s in snaps])
    key = cells * nz + zbin
    sums = np.bincount(key, weights=vals, minlength=ncell * nz).reshape(ncell, nz)
    zsum = np.bincount(key, weights=zs, minlength=ncell * nz).reshape(ncell, nz)
    counts = np.bincount(key, minlength=ncell * nz).reshape(ncell, nz)
    full = np.all(counts > 0, axis=0)
    if not full.any():
        raise InsufficientDataError("no z-bin is populated for every cell position")
    runs = np.flatnonzero(np.diff(np.concatenate([[0], full.astype(int), [0]])))
    starts, ends = runs[::2], runs[1::2]
    j = int(np.argmax(ends - starts))
    sl = slice(starts[j], ends[j])
    zc = zsum[:, sl] / counts[:, sl]
    uc = sums[:, sl] / counts[:, sl]
    zgrid = zmin + (np.arange(nz)[sl] + 0.5) * dz
    table = np.array([np.interp(zgrid, zc[i], uc[i]) for i in range(ncell)])
    avg = table.mean(axis=0)
    head = np.flatnonzero(avg >= 1.0 - plateau_tol)
    foot = np.flatnonzero(avg <= floor)
    if head.size == 0 or foot.size == 0 or foot[-1] <= head[0]:
        raise InsufficientDataError("z-coverage does not span both plateaus")
    i0 = head[head < foot[-1]][-1]
    i1 = foot[foot > i0][0]
    table, zgrid, avg = table[:, i0:i1 + 1], zgrid[i0:i1 + 1], avg[i0:i1 + 1]
    i = np.flatnonzero(avg > LEVEL)[-1]
    z_half = zgrid[i] + (avg[i] - LEVEL) / (avg[i] - avg[i + 1]) * dz
    profile = FrontProfile(e, float(c), zgrid - z_half, table.reshape(cells_per_axis + (-1,)), LEVEL)
    profile.decay = fit_tail(profile, *tail)
    return profile


def fit_tail(profile: FrontProfile, lo=1e-8, hi=1e-3):
    """Fit ``log U = log C - lambda0 z`` on the tail; ``C`` is raised so the bound holds on the fit range."""
    flat = profile.table.reshape(-1, profile.z.size)
    envelope = flat.max(axis=0)
    sel = (envelope > lo) & (envelope < hi) & (profile.z > 0)
    if sel.sum() < 3:
        raise InsufficientDataError("tail too short to fit an exponential")
    slope, icpt = np.polyfit(profile.z[sel], np.log(envelope[sel]), 1)
    lam0 = -slope
    C = float(np.max(envelope[sel] * np.exp(lam0 * profile.z[sel])))
    return (C, float(lam0))


def profile_monotone(profile: FrontProfile, tol=0.0):
    """True iff ``U`` decreases strictly in ``z`` at every cell position (down to ``tol``)."""
    d = np.diff(profile.table.reshape(-1, profile.z.size), axis=1)
    return bool(np.all(d < -tol))


def front_residual(m: PeriodicMedium, profile: FrontProfile, h=None, half_width=8.0, t=0.0, dt=1e-3):
    """Sup-norm residual of the PDE for ``phi(t, x) = U(x, x.e - c t)`` on a patch around the front."""
    e = profile.direction
    h = 0.05 if h is None else h
    n = int(round(2 * half_width / h)) + 1
    center = np.round(profile.speed * t * e / h) * h
    grid = Grid(tuple(center - half_width), (n,) * m.dim, h)
    x = grid.points()
    phi = profile.reconstruct(t, x)
    dphi = (profile.reconstruct(t + dt, x) - profile.reconstruct(t - dt, x)) / (2 * dt)
    disc = discretize(m, grid)
    flat_x = x.reshape(-1, m.dim)
    lphi = disc.operator(phi).ravel()
    react = m.reaction(phi.ravel(), None if m.reaction.homogeneous else flat_x)
    res = (dphi.ravel() - lphi - react).reshape(grid.shape)
    inner = tuple(slice(2, -2) for _ in range(m.dim))
    return float(np.max(np.abs(res[inner])))
