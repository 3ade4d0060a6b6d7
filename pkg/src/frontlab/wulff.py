"""Wulff shapes from speed tables, shifted shapes and the geometric checks on them.

The predicted invasion shape of compactly supported data is

    W0 = { x : x . xi < c(xi) for every unit xi },

with radial function ``w(e) = min over xi.e > 0 of c(xi) / (xi . e)``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import HalfspaceIntersection

from frontlab.errors import CoverageError, DomainError
from frontlab.geometry import PolygonShape, unit_circle

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# speed tables


class SpeedFunction:
    """Speeds sampled on directions, interpolated piecewise-linearly in angle."""

    def __init__(self, directions, speeds):
        d = np.asarray(directions, dtype=float)
        c = np.asarray(speeds, dtype=float)
        if d.ndim == 1:
            d = d[:, None]
        if len(d) != len(c):
            raise DomainError("directions and speeds differ in length")
        if np.any(~np.isfinite(c)) or np.any(c <= 0):
            raise DomainError("every speed must be positive")
        self.dim = d.shape[1]
        if self.dim == 1:
            if len(d) != 2 or np.sign(d[:, 0]).sum() != 0:
                raise CoverageError("one-dimensional speed tables need the directions +1 and -1")
            order = np.argsort(d[:, 0])
            self.directions, self.speeds = np.sign(d[order]), c[order]
            self.angles = None
            return
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        ang = np.mod(np.arctan2(d[:, 1], d[:, 0]), TWO_PI)
        order = np.argsort(ang)
        self.angles, self.directions, self.speeds = ang[order], d[order], c[order]
        if len(self.angles) < 8:
            raise CoverageError("need at least 8 directions covering the circle")
        gaps = np.diff(np.append(self.angles, self.angles[0] + TWO_PI))
        if np.max(gaps) >= 0.5 * np.pi:
            raise CoverageError("directions leave an angular gap of a quarter turn or more")

    @classmethod
    def from_any(cls, speeds):
        if isinstance(speeds, SpeedFunction):
            return speeds
        if hasattr(speeds, "directions") and hasattr(speeds, "speeds"):
            return cls(speeds.directions, speeds.speeds)
        if isinstance(speeds, dict):
            keys = list(speeds)
            return cls(np.array(keys, dtype=float), np.array([speeds[k] for k in keys], dtype=float))
        d, c = speeds
        return cls(d, c)

    @property
    def c_max(self):
        return float(np.max(self.speeds))

    @property
    def c_min(self):
        return float(np.min(self.speeds))

    def at_angle(self, theta):
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        xp = np.concatenate([self.angles - TWO_PI, self.angles, self.angles + TWO_PI])
        fp = np.tile(self.speeds, 3)
        return np.interp(theta, xp, fp)

    def __call__(self, nu):
        nu = np.asarray(nu, dtype=float)
        if self.dim == 1:
            return np.where(nu[..., 0] > 0, self.speeds[1], self.speeds[0])
        return self.at_angle(np.arctan2(nu[..., 1], nu[..., 0]))

    def scaled(self, s):
        return SpeedFunction(self.directions, s * self.speeds)


# ---------------------------------------------------------------------------
# Wulff shape


@dataclass
class WulffShape:
    """Sampled Freidlin-Gärtner envelope.

    ``directions``/``radii`` give ``w(e)`` on the evaluation grid;
    ``minimizers[i]`` holds every minimising ``xi`` for ``directions[i]``.
    ``xi``/``c_xi`` are the (refined) halfspaces ``x . xi < c(xi)``.
    """

    speeds: SpeedFunction
    directions: np.ndarray
    radii: np.ndarray
    minimizers: list
    xi: np.ndarray
    c_xi: np.ndarray
    tie_tol: float
    vertices: np.ndarray = field(default=None)
    _hpoly: PolygonShape = field(default=None, repr=False)

    @property
    def dim(self):
        return self.directions.shape[1]

    def radial_polygon(self):
        return PolygonShape(self.vertices)

    def halfspace_polygon(self):
        """Polygon of the halfspace intersection (the discrete envelope itself)."""
        if self._hpoly is None:
            hs = np.column_stack([self.xi, -self.c_xi])
            inter = HalfspaceIntersection(hs, np.zeros(2))
            pts = inter.intersections
            ang = np.arctan2(pts[:, 1], pts[:, 0])
            pts = pts[np.argsort(ang)]
            keep = np.ones(len(pts), bool)
            keep[1:] = np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-12
            self._hpoly = PolygonShape(pts[keep])
        return self._hpoly

    @property
    def polygon(self):
        return self.halfspace_polygon()

    def contains(self, x):
        if self.dim == 1:
            x = np.asarray(x, dtype=float)[..., 0]
            return (x > -self.radii[0]) & (x < self.radii[1])
        return self.polygon.contains(x)

    def signed_distance(self, x):
        return self.polygon.signed_distance(x)

    def boundary_distance(self, x):
        return self.polygon.boundary_distance(x)

    def radius(self, e):
        """``w(e)`` for arbitrary unit vectors, from the same discrete minimum.

        A single direction gives a float, a stack of directions an array.
        """
        e = np.asarray(e, dtype=float)
        dots = np.atleast_2d(e) @ self.xi.T
        ratio = np.where(dots > 0, self.c_xi[None, :] / np.where(dots > 0, dots, 1.0), np.inf)
        w = ratio.min(axis=1)
        return float(w[0]) if e.ndim == 1 else w

    def boundary_samples(self, n, offset=0.0):
        e = unit_circle(n, offset)
        return self.radius(e)[:, None] * e

    def is_convex(self):
        return self.radial_polygon().is_convex(tol=1e-12 * self.speeds.c_max ** 2)

    def as_dict(self):
        return {
            "directions": self.directions.tolist(),
            "radii": self.radii.tolist(),
            "vertices": self.vertices.tolist(),
            "minimizers": [m.tolist() for m in self.minimizers],
        }


def wulff_shape(speeds, n_eval=512, refine=8, tie_tol=None):
    """Discrete envelope ``w(e) = min c(xi) / (xi . e)`` over a refined ``xi`` grid.

    Speeds are interpolated onto ``refine * n_eval`` equally spaced ``xi``;
    every evaluation direction is itself one of them, so ``xi . e`` is formed
    from angle differences and a constant table returns a constant radius
    exactly. Minimisers within ``tie_tol`` (default ``1e-6 c_max``) are all kept.
    """
    sf = SpeedFunction.from_any(speeds)
    tie = 1e-6 * sf.c_max if tie_tol is None else float(tie_tol)
    if sf.dim == 1:
        e = np.array([[-1.0], [1.0]])
        radii = sf.speeds.copy()
        mins = [np.array([[-1.0]]), np.array([[1.0]])]
        return WulffShape(sf, e, radii, mins, e.copy(), radii.copy(), tie, e * radii[:, None])
    n_fine = int(refine) * int(n_eval)
    xi_ang = TWO_PI * np.arange(n_fine) / n_fine
    xi = np.column_stack([np.cos(xi_ang), np.sin(xi_ang)])
    c_fine = sf.at_angle(xi_ang)
    quarter = n_fine // 4
    k = np.arange(-quarter + 1, quarter) if n_fine % 4 == 0 else np.arange(-(n_fine // 4), n_fine // 4 + 1)
    cos_k = np.cos(TWO_PI * k / n_fine)
    e_idx = np.arange(n_eval) * refine
    idx = (e_idx[:, None] + k[None, :]) % n_fine
    ratio = c_fine[idx] / cos_k[None, :]
    j = np.argmin(ratio, axis=1)
    radii = ratio[np.arange(n_eval), j]
    mins = [xi[idx[i, ratio[i] - radii[i] <= tie]] for i in range(n_eval)]
    e = xi[e_idx]
    return WulffShape(sf, e, radii, mins, xi, c_fine, tie, radii[:, None] * e)


# ---------------------------------------------------------------------------
# Freidlin-Gärtner identity on boundary points


@dataclass
class FGSample:
    point: np.ndarray
    normals: np.ndarray
    residuals: np.ndarray
    at_vertex: bool

    @property
    def worst(self):
        return float(np.max(self.residuals))


@dataclass
class FGReport:
    samples: list
    tol: float

    @property
    def max_residual(self):
        return max((s.worst for s in self.samples), default=0.0)

    @property
    def passed(self):
        return self.max_residual <= self.tol

    def rows(self):
        return [{"x": float(s.point[0]), "y": float(s.point[1]), "residual": s.worst,
                 "vertex": s.at_vertex, "n_normals": len(s.normals)} for s in self.samples]


def regular_fg_check(shape, speeds=None, boundary_samples=32, tol=None, normal_span=None,
                     vertex_tol=None, fan_steps=8):
    """Residuals ``|z . nu - c(nu)|`` at boundary points ``z``.

    ``shape`` is a :class:`WulffShape` or any :class:`PolygonShape`;
    ``speeds`` defaults to the shape's own table. Inside an edge ``nu`` is the
    edge normal (or a chord normal over ``normal_span``); at a vertex every
    normal of the fan between the two edge normals is tested.
    """
    sf = SpeedFunction.from_any(speeds if speeds is not None else shape.speeds)
    poly = shape.polygon if isinstance(shape, WulffShape) else shape
    if np.isscalar(boundary_samples):
        pts = poly.boundary_samples(int(boundary_samples), offset=np.pi / int(boundary_samples))
    else:
        pts = np.asarray(boundary_samples, dtype=float)
    lo, hi = poly.bbox()
    vtol = 1e-9 * float(np.max(hi - lo)) if vertex_tol is None else vertex_tol
    out = []
    for z in pts:
        fan = poly.vertex_fan(z, vtol) if normal_span is None else (poly.normal_at(z, normal_span),)
        if len(fan) == 2:
            a0 = np.arctan2(fan[0][1], fan[0][0])
            a1 = a0 + np.mod(np.arctan2(fan[1][1], fan[1][0]) - a0, TWO_PI)
            ang = np.linspace(a0, a1, fan_steps + 1)
            normals = np.column_stack([np.cos(ang), np.sin(ang)])
        else:
            normals = np.atleast_2d(fan[0])
        res = np.abs(normals @ z - sf(normals))
        out.append(FGSample(z, normals, res, len(fan) == 2))
    return FGReport(out, 0.05 * sf.c_min if tol is None else tol)


def halfspace_containment(points, speeds, n_xi=1024, tol=0.0):
    """Largest ``z . xi - c(xi)`` over sampled ``xi`` (should be ``<= tol`` on the boundary)."""
    sf = SpeedFunction.from_any(speeds)
    xi = unit_circle(n_xi)
    return float(np.max(np.asarray(points) @ xi.T - sf(xi)[None, :]))


# ---------------------------------------------------------------------------
# shifted shapes


class ShiftedShape:
    """Predicted shape for data that is not compactly supported.

    ``cone``: ``{x : dist(x, C) < c}`` with ``C = {y <= alpha |x|}``, the
    Minkowski sum of the cone and the open ball of radius ``c``.
    ``halfspace``: ``{x : x . e < c}``.
    A polygon truncated at ``extent`` backs the distance queries; its
    truncation edges are flagged and excluded from boundary distances.
    """

    def __init__(self, kind, speed, alpha=None, direction=None, extent=20.0, arc_points=720):
        if speed <= 0:
            raise DomainError("speed must be positive")
        self.kind = kind
        self.speed = float(speed)
        self.extent = float(extent)
        if kind == "cone":
            if alpha is None or not np.isfinite(alpha) or alpha == 0:
                raise DomainError("cone parameter must be finite and nonzero")
            self.alpha = float(alpha)
            self.direction = np.array([0.0, 1.0])
            self._rays = np.array([[1.0, self.alpha], [-1.0, self.alpha]]) / np.hypot(1.0, self.alpha)
        elif kind == "halfspace":
            e = np.asarray(direction, dtype=float)
            self.direction = e / np.linalg.norm(e)
            self.alpha = None
        else:
            raise DomainError(f"unknown shifted shape {kind!r}")
        self._arc_points = arc_points
        self._poly = None

    @property
    def apex(self):
        """Boundary point on the symmetry axis."""
        if self.kind == "halfspace":
            return self.speed * self.direction
        k = self.speed * np.hypot(1.0, self.alpha) if self.alpha > 0 else self.speed
        return np.array([0.0, k])

    def cone_distance(self, x):
        """Euclidean distance to the cone ``{y <= alpha |x|}``."""
        x = np.asarray(x, dtype=float)
        inside = x[..., 1] <= self.alpha * np.abs(x[..., 0])
        d = np.full(x.shape[:-1], np.inf)
        for r in self._rays:
            t = np.maximum(x @ r, 0.0)
            d = np.minimum(d, np.linalg.norm(x - t[..., None] * r, axis=-1))
        return np.where(inside, 0.0, d)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "halfspace":
            return x @ self.direction < self.speed
        return self.cone_distance(x) < self.speed

    @property
    def polygon(self):
        if self._poly is None:
            self._poly = self._build_polygon()
        return self._poly

    def _build_polygon(self):
        R, c = self.extent, self.speed
        if self.kind == "halfspace":
            e = self.direction
            t = np.array([-e[1], e[0]])
            base = c * e
            v = [base - R * t, base + R * t, base + R * t - 2 * R * e, base - R * t - 2 * R * e]
            return PolygonShape(np.array(v), artificial=[False, True, True, True])
        a = self.alpha
        s = np.hypot(1.0, a)
        # offset boundary lines y = a|x| + c s on the two flanks, parametrised by x
        xr = np.linspace(0.0, R, 2)
        if a > 0:
            right = np.column_stack([xr, a * xr + c * s])
            body = np.concatenate([right[::-1] * [-1, 1], right[1:]])
        else:
            # flanks touch the rounded apex at the offset of the ray endpoints
            n_right = np.array([-a, 1.0]) / s  # outward normal of the right flank
            arc_a0 = np.arctan2(n_right[1], n_right[0])
            ang = np.linspace(np.pi - arc_a0, arc_a0, self._arc_points)
            arc = c * np.column_stack([np.cos(ang), np.sin(ang)])
            tip = arc[-1] + (R / s) * np.array([1.0, a])
            body = np.concatenate([[tip * [-1, 1]], arc, [tip]])
        lowest = min(body[:, 1].min(), 0.0) - R
        v = np.concatenate([body, [[body[-1, 0], lowest], [body[0, 0], lowest]]])
        art = np.zeros(len(v), bool)
        art[len(body) - 1:] = True
        return PolygonShape(v, artificial=art)

    def boundary_distance(self, x):
        return self.polygon.boundary_distance(x)

    def signed_distance(self, x):
        d = self.boundary_distance(x)
        return np.where(self.contains(x), -d, d)

    def boundary_samples(self, n, span=None):
        """``n`` points on the true boundary, evenly spread in arc length over ``|x| <= span``."""
        span = 2.0 * self.speed if span is None else span
        if self.kind == "halfspace":
            e = self.direction
            t = np.array([-e[1], e[0]])
            return self.speed * e + np.linspace(-span, span, n)[:, None] * t
        pts = self.polygon.densify(1e-3 * self.speed)
        pts = pts[np.abs(pts[:, 0]) <= span]
        order = np.argsort(pts[:, 0])
        pts = pts[order]
        arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
        targets = np.linspace(0.0, arc[-1], n)
        return np.column_stack([np.interp(targets, arc, pts[:, 0]), np.interp(targets, arc, pts[:, 1])])


def shifted_shape(kind, speed, alpha=None, direction=None, **kw):
    """Build a :class:`ShiftedShape` (``kind`` is ``"cone"`` or ``"halfspace"``)."""
    return ShiftedShape(kind, speed, alpha=alpha, direction=direction, **kw)


# ---------------------------------------------------------------------------
# cone and ball conditions


@dataclass
class ConeReport:
    gamma: float
    lambdas: np.ndarray
    margins: np.ndarray  # (n_points, n_lambda)
    tol: float

    @property
    def worst_margin(self):
        return float(np.min(self.margins))

    @property
    def passed(self):
        return self.worst_margin >= -self.tol

    def rows(self):
        return [{"point": i, "lambda": float(l), "margin": float(self.margins[i, j])}
                for i in range(self.margins.shape[0]) for j, l in enumerate(self.lambdas)]


def _raster_margin(shape, center, radius, inside, n_ring=64, n_rad=8):
    """Worst signed clearance of a rasterised ball against ``shape``.

    For ``inside`` the ball must lie in the shape, otherwise in its complement.
    The margin is the smallest distance from ball samples to the far side of
    the boundary; negative means a sample sits on the wrong side.
    """
    if radius <= 0:
        sd = float(shape.signed_distance(center[None, :])[0])
        return -sd if inside else sd
    r = radius * np.sqrt((np.arange(n_rad) + 1) / n_rad)
    ring = unit_circle(n_ring)
    pts = np.concatenate([center[None, :], (center + r[:, None, None] * ring[None]).reshape(-1, 2)])
    sd = shape.signed_distance(pts)
    return float(np.min(-sd if inside else sd))


def cone_conditions_check(shape, gamma, boundary_samples, lambdas=(0.25, 0.5, 0.75, 1.5, 2.0), tol=None,
                          rasterized=False):
    """Interior/exterior cone balls ``B_{|1-lambda| gamma}(lambda z)``.

    For ``lambda < 1`` the ball must lie inside the shape and for ``lambda > 1``
    outside. The margin is ``dist(lambda z, boundary) - |1 - lambda| gamma`` on
    the correct side, or a rasterised ball clearance when ``rasterized``.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam < 0) or np.any(lam == 1.0):
        raise DomainError("lambda samples must lie in [0, 1) or (1, inf)")
    z = np.asarray(boundary_samples, dtype=float)
    margins = np.empty((len(z), len(lam)))
    for j, l in enumerate(lam):
        centers = l * z
        r = abs(1.0 - l) * gamma
        if rasterized:
            margins[:, j] = [_raster_margin(shape, c, r, l < 1) for c in centers]
        else:
            sd = shape.signed_distance(centers)
            margins[:, j] = (-sd if l < 1 else sd) - r
    lo = 0.0 if tol is None else tol
    return ConeReport(float(gamma), lam, margins, lo)


@dataclass
class BallProbe:
    interior: bool
    exterior: bool
    normal: np.ndarray = None
    interior_margin: float = -np.inf
    exterior_margin: float = -np.inf


def ball_condition_probe(shape, z, r, tol=None, n_candidates=720):
    """Search for radius-``r`` balls touching ``z`` from inside and outside.

    A candidate normal ``nu`` admits the interior ball ``B_r(z - r nu)`` when
    its centre lies at least ``r - tol`` inside the boundary, and the exterior
    ball ``B_r(z + r nu)`` likewise outside. ``normal`` is returned when one
    candidate admits both.
    """
    z = np.asarray(z, dtype=float)
    tol = 1e-3 * r if tol is None else tol
    nu = unit_circle(n_candidates)
    sd_in = shape.signed_distance(z[None, :] - r * nu)
    sd_out = shape.signed_distance(z[None, :] + r * nu)
    m_in = -sd_in - r
    m_out = sd_out - r
    ok_in = m_in >= -tol
    ok_out = m_out >= -tol
    both = ok_in & ok_out
    normal = None
    if both.any():
        score = np.where(both, np.minimum(m_in, m_out), -np.inf)
        normal = nu[int(np.argmax(score))]
    return BallProbe(bool(ok_in.any()), bool(ok_out.any()), normal, float(np.max(m_in)), float(np.max(m_out)))
