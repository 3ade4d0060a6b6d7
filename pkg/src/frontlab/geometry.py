"""Planar polygon regions: membership, boundary distance, ray sampling and normals."""

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon

from frontlab.errors import DomainError


def unit_circle(n, offset=0.0):
    """``n`` unit vectors at angles ``offset + 2 pi k / n``."""
    a = offset + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(a), np.sin(a)])


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


class PolygonShape:
    """Open region bounded by a simple closed polygon (vertices in counter-clockwise order).

    ``artificial`` marks edges that only truncate an unbounded region; they are
    ignored by :meth:`boundary_distance`.
    """

    def __init__(self, vertices, artificial=None):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DomainError("a polygon needs at least three planar vertices")
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        art = np.zeros(len(v), bool) if artificial is None else np.asarray(artificial, bool)[:len(v)]
        if _signed_area(v) < 0:
            v = v[::-1]
            art = np.roll(art[::-1], -1)
        self.vertices = v
        self.artificial = art
        self._poly = Polygon(v)
        self._true = self._true_boundary()

    def _true_boundary(self):
        if not self.artificial.any():
            return self._poly.exterior
        segs = []
        n = len(self.vertices)
        for i in range(n):
            if not self.artificial[i]:
                segs.append(LineString([self.vertices[i], self.vertices[(i + 1) % n]]))
        return shapely.union_all(segs)

    @property
    def polygon(self):
        return self._poly

    @property
    def area(self):
        return self._poly.area

    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return shapely.contains_xy(self._poly, x[..., 0], x[..., 1])

    def boundary_distance(self, x):
        x = np.asarray(x, dtype=float)
        pts = shapely.points(x.reshape(-1, 2))
        return shapely.distance(self._true, pts).reshape(x.shape[:-1])

    def signed_distance(self, x):
        """Distance to the boundary, negative inside."""
        d = self.boundary_distance(x)
        return np.where(self.contains(x), -d, d)

    def edges(self):
        v = self.vertices
        return v, np.roll(v, -1, axis=0)

    def edge_normals(self):
        a, b = self.edges()
        t = b - a
        nrm = np.column_stack([t[:, 1], -t[:, 0]])
        return nrm / np.linalg.norm(nrm, axis=1, keepdims=True)

    def is_convex(self, tol=0.0):
        a, b = self.edges()
        t = b - a
        cross = t[:, 0] * np.roll(t[:, 1], -1) - t[:, 1] * np.roll(t[:, 0], -1)
        return bool(np.all(cross >= -tol))

    def ray_hits(self, directions, center=(0.0, 0.0), reach=None):
        """Farthest boundary point along each ray ``center + s d``, ``s > 0``."""
        c = np.asarray(center, dtype=float)
        lo, hi = self.bbox()
        reach = 2.0 * float(np.max(np.abs(np.concatenate([lo - c, hi - c])))) + 1.0 if reach is None else reach
        out = []
        for d in np.asarray(directions, dtype=float):
            seg = LineString([c, c + reach * d])
            hit = seg.intersection(self._true)
            if hit.is_empty:
                out.append(np.full(2, np.nan))
                continue
            pts = np.array([p for g in getattr(hit, "geoms", [hit]) for p in g.coords])
            s = (pts - c) @ d
            out.append(pts[np.argmax(s)])
        return np.array(out)

    def boundary_samples(self, n, center=(0.0, 0.0), offset=0.0):
        """``n`` boundary points on rays at equally spaced angles (star-shaped regions)."""
        return self.ray_hits(unit_circle(n, offset), center)

    def densify(self, spacing, include_artificial=False):
        """Points along the boundary with gaps at most ``spacing``."""
        a, b = self.edges()
        pts = []
        for i in range(len(a)):
            if self.artificial[i] and not include_artificial:
                continue
            k = max(1, int(np.ceil(np.linalg.norm(b[i] - a[i]) / spacing)))
            s = np.arange(k)[:, None] / k
            pts.append(a[i] + s * (b[i] - a[i]))
        return np.concatenate(pts) if pts else np.zeros((0, 2))

    def normal_at(self, z, span=None):
        """Exterior normal at the boundary point nearest ``z``.

        Without ``span`` the normal of the nearest edge is returned; with
        ``span`` it is the normal of the chord joining the boundary points at
        arc-length ``-span`` and ``+span``, which damps staircase noise.
        """
        z = np.asarray(z, dtype=float)
        ring = self._poly.exterior
        s = ring.project(shapely.Point(z))
        if span is None:
            a, b = self.edges()
            ab = b - a
            tt = np.clip(np.einsum("ij,ij->i", z - a, ab) / np.einsum("ij,ij->i", ab, ab), 0, 1)
            i = int(np.argmin(np.linalg.norm(a + tt[:, None] * ab - z, axis=1)))
            return self.edge_normals()[i]
        length = ring.length
        p = np.array(ring.interpolate((s - span) % length).coords[0])
        q = np.array(ring.interpolate((s + span) % length).coords[0])
        t = q - p
        nrm = np.array([t[1], -t[0]])
        return nrm / np.linalg.norm(nrm)

    def vertex_fan(self, z, tol):
        """Normals of the two edges meeting at a vertex within ``tol`` of ``z`` (else one normal)."""
        z = np.asarray(z, dtype=float)
        d = np.linalg.norm(self.vertices - z, axis=1)
        i = int(np.argmin(d))
        nrm = self.edge_normals()
        if d[i] <= tol:
            return nrm[i - 1], nrm[i]
        return (self.normal_at(z),)
