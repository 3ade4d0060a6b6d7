"""Upper level sets, Hausdorff distances and rescaled convergence series."""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from skimage import measure

from frontlab.errors import DomainError
from frontlab.geometry import PolygonShape


@dataclass
class PlanarSet:
    """Sampled planar set: boundary samples plus interior grid samples.

    ``tag`` is ``"point-cloud"``, ``"polygon"`` or ``"empty"``. ``contours``
    keeps the closed boundary curves (each an ``(n, 2)`` array) when known.
    """

    tag: str
    boundary: np.ndarray
    interior: np.ndarray
    spacing: float
    contours: list = field(default_factory=list)

    def __post_init__(self):
        self.boundary = np.asarray(self.boundary, dtype=float).reshape(-1, 2)
        self.interior = np.asarray(self.interior, dtype=float).reshape(-1, 2)
        if (self.tag == "empty") != self.is_empty:
            raise DomainError("the empty tag must match an empty sample set")

    @classmethod
    def empty(cls, spacing=0.0):
        return cls("empty", np.zeros((0, 2)), np.zeros((0, 2)), spacing)

    @property
    def is_empty(self):
        return len(self.boundary) == 0 and len(self.interior) == 0

    @property
    def points(self):
        return np.concatenate([self.boundary, self.interior])

    def bbox(self):
        p = self.points
        return p.min(axis=0), p.max(axis=0)

    def scaled(self, s):
        return PlanarSet(self.tag, self.boundary * s, self.interior * s, self.spacing * s,
                         [c * s for c in self.contours])

    def clipped(self, lo, hi):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)

        def keep(p):
            return p[np.all((p >= lo) & (p <= hi), axis=1)]
        out = PlanarSet.__new__(PlanarSet)
        out.boundary, out.interior = keep(self.boundary), keep(self.interior)
        out.spacing, out.contours = self.spacing, []
        out.tag = "empty" if out.is_empty else "point-cloud"
        return out

    def to_polygon(self):
        """Longest closed contour as a :class:`PolygonShape`."""
        if not self.contours:
            raise DomainError("set has no closed contour")
        c = max(self.contours, key=len)
        return PolygonShape(c)

    def radius_along(self, directions, center=(0.0, 0.0)):
        return np.linalg.norm(self.to_polygon().ray_hits(directions, center) - np.asarray(center), axis=1)


def upper_level_set(u, lam):
    """``{x : u(x) > lam}`` of a 2D snapshot as boundary contour samples plus interior nodes.

    The array is padded with ``-inf`` so every contour closes, even where the
    set touches the box.
    """
    if not 0.0 < lam < 1.0:
        raise DomainError("level must lie in (0, 1)")
    grid = u.grid
    if grid.dim != 2:
        raise DomainError("level sets are computed for planar fields")
    vals = u.values
    mask = vals > lam
    h = grid.h
    if not mask.any():
        return PlanarSet.empty(h)
    pts = grid.points()
    interior = pts[mask]
    padded = np.pad(vals, 1, constant_values=-1.0)
    lower = np.asarray(grid.lower, dtype=float) - h
    contours = [lower + c * h for c in measure.find_contours(padded, lam)]
    boundary = np.concatenate(contours) if contours else np.zeros((0, 2))
    return PlanarSet("point-cloud", boundary, interior, h, contours)


def region_set(region, spacing, lo, hi):
    """Rasterise a region (anything with ``contains`` and ``polygon``) inside the box ``[lo, hi]``."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    i0 = np.floor(lo / spacing).astype(int)
    i1 = np.ceil(hi / spacing).astype(int)
    xs = np.arange(i0[0], i1[0] + 1) * spacing
    ys = np.arange(i0[1], i1[1] + 1) * spacing
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([X, Y], axis=-1).reshape(-1, 2)
    interior = pts[region.contains(pts)]
    poly = region.polygon
    boundary = poly.densify(spacing)
    boundary = boundary[np.all((boundary >= lo) & (boundary <= hi), axis=1)]
    if len(interior) == 0 and len(boundary) == 0:
        return PlanarSet.empty(spacing)
    return PlanarSet("polygon", boundary, interior, spacing, [poly.vertices])


def _directed(a, b):
    if len(a) == 0:
        return 0.0
    if len(b) == 0:
        return np.inf
    d, _ = cKDTree(b).query(a, k=1)
    return float(np.max(d))


def hausdorff(A: PlanarSet, B: PlanarSet, window=None, margin=None):
    """Hausdorff distance on boundary and interior samples.

    ``d(A, empty) = inf`` for non-empty ``A`` and ``d(empty, empty) = 0``.
    With ``window = (lo, hi)`` only points of each set inside the window are
    measured, against the other set taken over the window enlarged by
    ``margin`` (default: the window half-width), so clipping does not create
    artificial far points.
    """
    pa, pb = A.points, B.points
    if window is not None:
        lo, hi = (np.asarray(w, float) for w in window)
        margin = 0.5 * float(np.max(hi - lo)) if margin is None else margin

        def inside(p, l, u):
            return p[np.all((p >= l) & (p <= u), axis=1)]
        a_in, b_in = inside(pa, lo, hi), inside(pb, lo, hi)
        a_ext, b_ext = inside(pa, lo - margin, hi + margin), inside(pb, lo - margin, hi + margin)
        if len(a_in) == 0 and len(b_in) == 0:
            return 0.0
        return max(_directed(a_in, b_ext), _directed(b_in, a_ext))
    if len(pa) == 0 and len(pb) == 0:
        return 0.0
    if len(pa) == 0 or len(pb) == 0:
        return np.inf
    return max(_directed(pa, pb), _directed(pb, pa))


@dataclass
class ConvergenceSeries:
    level: float
    times: np.ndarray
    distances: np.ndarray
    window: tuple = None

    def rows(self):
        return [{"t": float(t), "d_H": float(d)} for t, d in zip(self.times, self.distances)]

    def decreasing_tail(self, n=5):
        d = self.distances[-n:]
        return bool(len(d) == n and np.all(np.diff(d) < 0))


def rescaled_convergence(traj, lam, target, window=None, margin=None, t_min=0.0):
    """Series ``d_H(E_lam(t) / t, target)`` over the snapshots with ``t > t_min``.

    The target is rasterised at the rescaled grid spacing ``h / t`` over the
    rescaled box (or over the window enlarged by the margin).
    """
    times, dists = [], []
    for snap in traj:
        if snap.t <= max(t_min, 0.0):
            continue
        t = snap.t
        E = upper_level_set(snap, lam).scaled(1.0 / t)
        g = snap.grid
        lo = np.asarray(g.lower, float) / t
        hi = np.asarray(g.upper, float) / t
        if window is not None:
            wlo, whi = (np.asarray(w, float) for w in window)
            m = 0.5 * float(np.max(whi - wlo)) if margin is None else margin
            lo, hi = np.maximum(lo, wlo - m), np.minimum(hi, whi + m)
        T = region_set(target, g.h / t, lo, hi)
        times.append(t)
        dists.append(hausdorff(E, T, window=window, margin=margin))
    return ConvergenceSeries(lam, np.array(times), np.array(dists), window)


def shape_from_levelset(traj, lam, t_final=None):
    """Rescaled level set ``E_lam(t_final) / t_final`` (the last snapshot by default)."""
    if t_final is None:
        snap = traj.fields[-1]
    else:
        snap = traj.at(t_final)
    if snap.t <= 0:
        raise DomainError("rescaling needs a positive time")
    return upper_level_set(snap, lam).scaled(1.0 / snap.t)


def window_box(center, half_width):
    c = np.asarray(center, dtype=float)
    return c - half_width, c + half_width


def inradius(pset: PlanarSet, center=(0.0, 0.0), n=360):
    """Radius of the largest ball about ``center`` inside the contour polygon (0 if outside)."""
    if pset.is_empty:
        return 0.0
    poly = pset.to_polygon()
    c = np.asarray(center, dtype=float)
    if not poly.contains(c[None, :])[0]:
        return 0.0
    return float(poly.boundary_distance(c[None, :])[0])
