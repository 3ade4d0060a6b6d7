"""IMEX finite-difference solver for periodic reaction-diffusion-advection equations.

Diffusion is treated implicitly, drift and reaction explicitly. The diffusion
matrix is an M-matrix and the explicit part is monotone under the default time
step, so the scheme satisfies a discrete comparison principle and keeps values
in [0, 1] without clamping.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from frontlab.errors import DomainError, NumericError, StructuralError
from frontlab.medium import PeriodicMedium


def _is_integer(x, tol=1e-9):
    return abs(x - round(x)) < tol


@dataclass(frozen=True)
class Grid:
    """Uniform node grid ``lower + i h``.

    ``periodic`` flags wrap-around axes. On a two-dimensional grid whose second
    axis is periodic, ``helical_shift`` identifies ``(x, y + n_y h)`` with
    ``(x - helical_shift h, y)``; this is how oblique planar fronts are put on
    an axis-aligned strip.
    """

    lower: tuple
    shape: tuple
    h: float
    periodic: tuple = ()
    helical_shift: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        if len(self.lower) != len(self.shape) or len(self.shape) not in (1, 2):
            raise StructuralError("grid must be one- or two-dimensional")
        if not self.periodic:
            object.__setattr__(self, "periodic", (False,) * len(self.shape))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))
        if not _is_integer(1.0 / self.h):
            raise DomainError(f"spacing h={self.h} does not divide the unit cell")
        for lo in self.lower:
            if not _is_integer(lo / self.h):
                raise DomainError("grid nodes must lie on the lattice h Z^N")
        for n, per in zip(self.shape, self.periodic):
            if per and not _is_integer(n * self.h):
                raise DomainError("periodic axes must span whole cells")
        if self.helical_shift and (self.dim != 2 or not self.periodic[1]):
            raise DomainError("helical shift needs a periodic second axis")

    @classmethod
    def box(cls, half_width, h, dim):
        """Node grid on ``[-L, L]^N``."""
        n = int(round(2 * half_width / h)) + 1
        return cls((-half_width,) * dim, (n,) * dim, h)

    @property
    def dim(self):
        return len(self.shape)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def upper(self):
        return tuple(lo + (n - 1) * self.h for lo, n in zip(self.lower, self.shape))

    def axis(self, k):
        return self.lower[k] + self.h * np.arange(self.shape[k])

    def points(self):
        mesh = np.meshgrid(*[self.axis(k) for k in range(self.dim)], indexing="ij")
        return np.stack(mesh, axis=-1)

    def index_of(self, x):
        """Nearest multi-index of a point."""
        return tuple(int(round((xi - lo) / self.h)) for xi, lo in zip(x, self.lower))

    def describe(self):
        return {"lower": list(self.lower), "shape": list(self.shape), "h": self.h,
                "periodic": list(self.periodic), "helical_shift": self.helical_shift}


@dataclass
class GridField:
    grid: Grid
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise StructuralError(f"values {self.values.shape} do not match grid {self.grid.shape}")
        if self.t < 0:
            raise DomainError("time must be non-negative")

    @classmethod
    def from_function(cls, grid, func, t=0.0):
        return cls(grid, func(grid.points()), t)

    def copy(self):
        return GridField(self.grid, self.values.copy(), self.t)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)

    def append(self, snap: GridField):
        if self.times and snap.t <= self.times[-1]:
            raise DomainError("snapshot times must increase strictly")
        self.times.append(float(snap.t))
        self.fields.append(snap)

    def __len__(self):
        return len(self.times)

    def __iter__(self):
        return iter(self.fields)

    def at(self, t, tol=1e-9):
        for s in self.fields:
            if abs(s.t - t) <= tol:
                return s
        raise KeyError(f"no snapshot at t={t}")


@dataclass(frozen=True)
class Boundary:
    """``neumann`` (zero flux) or ``dirichlet`` far-field values on every non-periodic side."""

    kind: str = "neumann"
    low: float = 0.0
    high: float = 0.0

    def __post_init__(self):
        if self.kind not in ("neumann", "dirichlet"):
            raise DomainError(f"unknown boundary kind {self.kind!r}")

    @classmethod
    def parse(cls, spec):
        if isinstance(spec, Boundary):
            return spec
        if spec is None or spec == "neumann":
            return cls()
        if isinstance(spec, (tuple, list)) and spec[0] in ("dirichlet", "dirichlet-farfield"):
            return cls("dirichlet", float(spec[1]), float(spec[2]))
        raise DomainError(f"cannot parse boundary {spec!r}")


# ---------------------------------------------------------------------------
# assembly


def _neighbor(grid, multi, axis, sign):
    """Flat index of the neighbour ``multi + sign e_axis`` and a mask of nodes that have none."""
    idx = [m.copy() for m in multi]
    idx[axis] = idx[axis] + sign
    n = grid.shape[axis]
    outside = (idx[axis] < 0) | (idx[axis] >= n)
    if grid.periodic[axis]:
        if grid.helical_shift and axis == 1:
            idx[0] = np.where(idx[1] >= n, idx[0] - grid.helical_shift, idx[0])
            idx[0] = np.where(idx[1] < 0, idx[0] + grid.helical_shift, idx[0])
            idx[0] = np.clip(idx[0], 0, grid.shape[0] - 1)
        idx[axis] = idx[axis] % n
        outside = np.zeros_like(outside)
    flat = np.ravel_multi_index(tuple(np.clip(i, 0, s - 1) for i, s in zip(idx, grid.shape)), grid.shape)
    return flat, outside


def _clamped_neighbor(grid, multi, offset):
    idx = [m + o for m, o in zip(multi, offset)]
    for k in range(grid.dim):
        n = grid.shape[k]
        if grid.periodic[k]:
            if grid.helical_shift and k == 1:
                idx[0] = np.where(idx[1] >= n, idx[0] - grid.helical_shift, idx[0])
                idx[0] = np.where(idx[1] < 0, idx[0] + grid.helical_shift, idx[0])
            idx[k] = idx[k] % n
    idx = [np.clip(i, 0, s - 1) for i, s in zip(idx, grid.shape)]
    return np.ravel_multi_index(tuple(idx), grid.shape)


@dataclass
class Discretization:
    """Sparse diffusion matrix ``D`` and drift matrix ``Q`` plus far-field source vectors."""

    grid: Grid
    diffusion: sp.csr_matrix
    drift: sp.csr_matrix
    diffusion_source: np.ndarray
    drift_source: np.ndarray
    nodes: np.ndarray

    def operator(self, values):
        u = np.asarray(values, dtype=float).ravel()
        out = self.diffusion @ u + self.diffusion_source + self.drift @ u + self.drift_source
        return out.reshape(self.grid.shape)


def discretize(m: PeriodicMedium, grid: Grid, boundary="neumann"):
    """Assemble the spatial operator ``div(A grad u) + q . grad u`` on ``grid``."""
    if grid.dim != m.dim:
        raise StructuralError(f"grid dimension {grid.dim} differs from medium dimension {m.dim}")
    bc = Boundary.parse(boundary)
    h = grid.h
    n = grid.size
    multi = [a.ravel() for a in np.meshgrid(*[np.arange(s) for s in grid.shape], indexing="ij")]
    nodes = grid.points().reshape(-1, grid.dim)
    flat = np.arange(n)
    rows, cols, vals = [], [], []
    qrows, qcols, qvals = [], [], []
    dsrc = np.zeros(n)
    qsrc = np.zeros(n)

    for k in range(grid.dim):
        e = np.zeros(grid.dim)
        e[k] = 0.5 * h
        # faces between each node and its +k neighbour
        nb, outside = _neighbor(grid, multi, k, +1)
        face = nodes + e
        a = m.sample_diffusion(face)[:, k, k]
        q = m.sample_drift(face)[:, k]
        inner = ~outside
        i, j = flat[inner], nb[inner]
        ai, qi = a[inner] / h**2, q[inner] / h
        qp, qm = np.maximum(qi, 0.0), np.minimum(qi, 0.0)
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [ai, ai, -ai, -ai]
        qrows += [i, i, j, j]
        qcols += [j, i, j, i]
        qvals += [qp, -qp, qm, -qm]
        if not grid.periodic[k]:
            hi_nodes = flat[outside]
            lo_mask = multi[k] == 0
            lo_nodes = flat[lo_mask]
            if bc.kind == "dirichlet":
                a_hi = a[outside] / h**2
                q_hi = q[outside] / h
                a_lo = m.sample_diffusion(nodes[lo_mask] - e)[:, k, k] / h**2
                q_lo = m.sample_drift(nodes[lo_mask] - e)[:, k] / h
                rows += [hi_nodes, lo_nodes]
                cols += [hi_nodes, lo_nodes]
                vals += [-a_hi, -a_lo]
                np.add.at(dsrc, hi_nodes, a_hi * bc.high)
                np.add.at(dsrc, lo_nodes, a_lo * bc.low)
                qp_hi = np.maximum(q_hi, 0.0)
                qm_lo = np.minimum(q_lo, 0.0)
                qrows += [hi_nodes, lo_nodes]
                qcols += [hi_nodes, lo_nodes]
                qvals += [-qp_hi, qm_lo]
                np.add.at(qsrc, hi_nodes, qp_hi * bc.high)
                np.add.at(qsrc, lo_nodes, -qm_lo * bc.low)

    if grid.dim == 2:
        a_nodes = m.sample_diffusion(nodes)
        if np.max(np.abs(a_nodes[:, 0, 1])) > 0.0:
            # centred cross-derivative stencil; not monotone in general
            for k, l in ((0, 1), (1, 0)):
                for sk in (+1, -1):
                    off = np.zeros(2)
                    off[k] = sk * h
                    akl = m.sample_diffusion(nodes + off)[:, k, l] / (4 * h * h)
                    for sl in (+1, -1):
                        offset = [0, 0]
                        offset[k] = sk
                        offset[l] = sl
                        nbr = _clamped_neighbor(grid, multi, offset)
                        rows.append(flat)
                        cols.append(nbr)
                        vals.append(sk * sl * akl)

    diff = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    drift = sp.csr_matrix((np.concatenate(qvals), (np.concatenate(qrows), np.concatenate(qcols))),
                          shape=(n, n))
    diff.sum_duplicates()
    drift.sum_duplicates()
    drift.eliminate_zeros()
    return Discretization(grid, diff, drift, dsrc, qsrc, nodes)


def apply_operator(m: PeriodicMedium, u: GridField, boundary="neumann"):
    """Discrete ``div(A grad u) + q . grad u`` (reaction excluded)."""
    disc = discretize(m, u.grid, boundary)
    return GridField(u.grid, disc.operator(u.values), u.t)


DT_CAP = 0.05  # first-order splitting error in front speeds is about -0.09 dt (relative)


def stable_dt(m: PeriodicMedium, h, cfl=0.5):
    """Largest step keeping the explicit part monotone: min(cfl h / sum|q|, 0.5 / Lip f)."""
    qmax = m.max_drift() * m.dim
    lip = m.lipschitz()
    bounds = [0.5 / lip] if lip > 0 else []
    if qmax > 0:
        bounds.append(cfl * h / qmax)
    return min(bounds) if bounds else 1.0


class Stepper:
    """One IMEX Euler step: ``(I - dt D) u' = u + dt (Q u + f(x, u)) + sources``."""

    def __init__(self, m, grid, dt, boundary="neumann", linear_solver="direct", rtol=1e-10,
                 max_iter=2000):
        if dt <= 0:
            raise DomainError("time step must be positive")
        self.medium = m
        self.grid = grid
        self.dt = float(dt)
        self.boundary = Boundary.parse(boundary)
        self.linear_solver = linear_solver
        self.rtol = rtol
        self.max_iter = max_iter
        self.disc = discretize(m, grid, self.boundary)
        n = grid.size
        self.matrix = (sp.identity(n, format="csc") - self.dt * self.disc.diffusion).tocsc()
        if linear_solver == "direct":
            self._lu = spla.splu(self.matrix)
        elif linear_solver == "cg":
            self._precond = sp.diags(1.0 / self.matrix.diagonal())
        else:
            raise DomainError(f"unknown linear solver {linear_solver!r}")
        self._x = None if m.reaction.homogeneous else self.disc.nodes
        self._explicit_source = self.dt * (self.disc.drift_source + self.disc.diffusion_source)

    def rhs(self, u):
        f = self.medium.reaction(u, self._x)
        return u + self.dt * (self.disc.drift @ u + f) + self._explicit_source

    def solve(self, b, guess=None):
        if self.linear_solver == "direct":
            return self._lu.solve(b)
        x, info = spla.cg(self.matrix, b, x0=guess, rtol=self.rtol, atol=0.0,
                          maxiter=self.max_iter, M=self._precond)
        if info != 0:
            res = np.linalg.norm(self.matrix @ x - b) / max(np.linalg.norm(b), 1e-300)
            raise NumericError(f"conjugate gradient did not converge (info={info})", residual=res)
        return x

    def __call__(self, values):
        u = np.asarray(values, dtype=float).ravel()
        return self.solve(self.rhs(u), guess=u).reshape(self.grid.shape)


def step(m: PeriodicMedium, u: GridField, dt, boundary="neumann", linear_solver="direct"):
    """Advance one IMEX step of length ``dt``."""
    stepper = Stepper(m, u.grid, dt, boundary, linear_solver)
    return GridField(u.grid, stepper(u.values), u.t + dt)


def simulate(m: PeriodicMedium, u0: GridField, T, output_times=None, boundary="neumann", dt=None,
             linear_solver="direct", callback=None, dt_cap=DT_CAP):
    """Integrate from ``u0.t`` to ``u0.t + T`` and record snapshots at ``output_times``.

    ``output_times`` are absolute times; the final time is always recorded. The
    default ``dt`` is the monotonicity bound capped at ``dt_cap`` for accuracy;
    an explicit ``dt`` is only reduced to the monotonicity bound. Steps are
    shrunk per segment so that every output time is hit exactly.
    """
    if T <= 0:
        raise DomainError("T must be positive")
    t0 = u0.t
    t_end = t0 + T
    dt_max = stable_dt(m, u0.grid.h)
    dt = min(dt_max, dt_cap) if dt is None else min(float(dt), dt_max)
    times = sorted(set(float(t) for t in (output_times if output_times is not None else [])))
    if any(t < t0 - 1e-12 or t > t_end + 1e-9 for t in times):
        raise DomainError("output times must lie in [t0, t0 + T]")
    if not times or abs(times[-1] - t_end) > 1e-9:
        times.append(t_end)
    traj = Trajectory()
    steppers = {}
    u = u0.values.copy()
    t = t0
    for target in times:
        if abs(target - t) <= 1e-12:
            if not traj.times or traj.times[-1] < t:
                traj.append(GridField(u0.grid, u.copy(), t))
            continue
        nsteps = max(1, math.ceil((target - t) / dt - 1e-9))
        dt_seg = (target - t) / nsteps
        key = round(dt_seg, 12)
        if key not in steppers:
            steppers[key] = Stepper(m, u0.grid, dt_seg, boundary, linear_solver)
        stepper = steppers[key]
        for _ in range(nsteps):
            u = stepper(u)
            t += dt_seg
            if callback is not None:
                callback(t, u)
        t = target
        traj.append(GridField(u0.grid, u.copy(), t))
    return traj


def ball_datum(grid, theta, rho, center=None, metric=None):
    """``theta`` times the indicator of a ball; ``metric`` (matrix) turns it into an ellipsoid."""
    x = grid.points()
    if center is not None:
        x = x - np.asarray(center, dtype=float)
    if metric is None:
        r2 = np.sum(x * x, axis=-1)
    else:
        inv = np.linalg.inv(np.asarray(metric, dtype=float))
        r2 = np.einsum("...i,ij,...j->...", x, inv, x)
    return GridField(grid, np.where(r2 < rho * rho, float(theta), 0.0))


def invasion_test(m: PeriodicMedium, theta, rho, T, ball=1.0, h=0.1, half_width=None, tol_inv=1e-2,
                  dt=None):
    """Does ``theta * 1_{B_rho}`` invade, judged by ``min u(T, .)`` over ``B_ball``?"""
    if not 0.0 < theta < 1.0 or rho <= 0:
        raise DomainError("need theta in (0, 1) and rho > 0")
    if half_width is None:
        half_width = math.ceil(rho + 0.6 * T + 5.0)
    grid = Grid.box(half_width, h, m.dim)
    u0 = ball_datum(grid, theta, rho)
    final = simulate(m, u0, T, dt=dt).fields[-1]
    r2 = np.sum(grid.points() ** 2, axis=-1)
    return bool(np.min(final.values[r2 <= ball * ball]) > 1.0 - tol_inv)


# ---------------------------------------------------------------------------
# snapshot dumps


def save_snapshot(snap: GridField, path):
    """Write a snapshot as ``.npz`` (binary) or ``.csv`` (header line plus one row per node)."""
    path = str(path)
    g = snap.grid
    if path.endswith(".npz"):
        np.savez(path, t=snap.t, lower=np.array(g.lower), h=g.h, N=g.dim, values=snap.values)
        return path
    with open(path, "w", newline="") as fh:
        fh.write(f"# t={snap.t!r} L={','.join(repr(v) for v in g.lower)} h={g.h!r} N={g.dim}\n")
        writer = csv.writer(fh)
        writer.writerow([f"x{k + 1}" for k in range(g.dim)] + ["u"])
        pts = g.points().reshape(-1, g.dim)
        for p, v in zip(pts, snap.values.ravel()):
            writer.writerow([repr(float(c)) for c in p] + [repr(float(v))])
    return path


def load_snapshot(path):
    path = str(path)
    if path.endswith(".npz"):
        data = np.load(path)
        values = data["values"]
        grid = Grid(tuple(data["lower"]), values.shape, float(data["h"]))
        return GridField(grid, values, float(data["t"]))
    with open(path) as fh:
        header = fh.readline().strip("# \n")
        meta = dict(item.split("=", 1) for item in header.split(" "))
        rows = list(csv.reader(fh))[1:]
    dim = int(meta["N"])
    arr = np.array(rows, dtype=float)
    h = float(meta["h"])
    lower = tuple(arr[:, k].min() for k in range(dim))
    shape = tuple(int(round((arr[:, k].max() - arr[:, k].min()) / h)) + 1 for k in range(dim))
    grid = Grid(lower, shape, h)
    return GridField(grid, arr[:, -1].reshape(shape), float(meta["t"]))
