"""Periodic media: diffusion matrix, drift field and reaction term on the unit cell.

Coefficients are closed-form evaluators. They are sampled onto the unit cell
only for validation; the solver evaluates them wherever its stencils need them.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from frontlab.errors import DomainError, StructuralError

TWO_PI = 2.0 * np.pi

REACTION_KINDS = ("bistable", "ignition", "kpp", "periodic-bistable", "custom-table")


@dataclass(frozen=True)
class ReactionSpec:
    """Reaction term ``f(x, s)`` selected by kind.

    ``bistable``           s (1 - s) (s - alpha)
    ``ignition``           (s - alpha)(1 - s) for s > alpha, zero below
    ``kpp``                s (1 - s)
    ``periodic-bistable``  s (1 - s)(s - alpha(x)), alpha(x) = alpha0 + amplitude sin(2 pi x_axis)
    ``custom-table``       piecewise linear through ``values`` on a uniform grid of [0, 1]
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in REACTION_KINDS:
            raise DomainError(f"unknown reaction kind {self.kind!r}")
        p = self.params
        if self.kind in ("bistable", "ignition"):
            alpha = float(p.get("alpha", np.nan))
            if not 0.0 < alpha < 1.0:
                raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
        elif self.kind == "periodic-bistable":
            a0 = float(p.get("alpha0", np.nan))
            amp = abs(float(p.get("amplitude", 0.0)))
            if not (0.0 < a0 - amp and a0 + amp < 1.0):
                raise DomainError("alpha(x) must stay inside (0, 1)")
        elif self.kind == "custom-table":
            values = np.asarray(p.get("values", ()), dtype=float)
            if values.ndim != 1 or values.size < 3:
                raise DomainError("custom table needs at least 3 values")
            if values[0] != 0.0 or values[-1] != 0.0:
                raise DomainError("custom table must vanish at s = 0 and s = 1")

    @classmethod
    def bistable(cls, alpha):
        return cls("bistable", {"alpha": float(alpha)})

    @classmethod
    def ignition(cls, alpha):
        return cls("ignition", {"alpha": float(alpha)})

    @classmethod
    def kpp(cls):
        return cls("kpp", {})

    @classmethod
    def periodic_bistable(cls, alpha0, amplitude, axis=0):
        return cls("periodic-bistable",
                   {"alpha0": float(alpha0), "amplitude": float(amplitude), "axis": int(axis)})

    @classmethod
    def table(cls, values):
        return cls("custom-table", {"values": tuple(float(v) for v in values)})

    @property
    def homogeneous(self) -> bool:
        return self.kind != "periodic-bistable"

    def threshold(self, x=None):
        """alpha (or alpha(x)) for the kinds that have one, else None."""
        if self.kind in ("bistable", "ignition"):
            return self.params["alpha"]
        if self.kind == "periodic-bistable":
            if x is None:
                return self.params["alpha0"]
            x = np.asarray(x, dtype=float)
            return (self.params["alpha0"]
                    + self.params["amplitude"] * np.sin(TWO_PI * x[..., self.params.get("axis", 0)]))
        return None

    def __call__(self, s, x=None):
        s = np.asarray(s, dtype=float)
        k = self.kind
        if k == "bistable":
            return s * (1.0 - s) * (s - self.params["alpha"])
        if k == "ignition":
            a = self.params["alpha"]
            return np.where(s > a, (s - a) * (1.0 - s), 0.0)
        if k == "kpp":
            return s * (1.0 - s)
        if k == "periodic-bistable":
            a = self.threshold(x) if x is not None else self.params["alpha0"]
            return s * (1.0 - s) * (s - a)
        values = np.asarray(self.params["values"])
        grid = np.linspace(0.0, 1.0, values.size)
        return np.interp(s, grid, values)

    def derivative(self, s, x=None):
        """Partial derivative with respect to ``s``."""
        s = np.asarray(s, dtype=float)
        k = self.kind
        if k in ("bistable", "periodic-bistable"):
            a = self.threshold(x) if (k == "periodic-bistable" and x is not None) else (
                self.params.get("alpha", self.params.get("alpha0")))
            # d/ds [s(1-s)(s-a)] = -3 s^2 + 2 (1 + a) s - a
            return -3.0 * s * s + 2.0 * (1.0 + a) * s - a
        if k == "ignition":
            a = self.params["alpha"]
            return np.where(s > a, 1.0 + a - 2.0 * s, 0.0)
        if k == "kpp":
            return 1.0 - 2.0 * s
        values = np.asarray(self.params["values"])
        n = values.size - 1
        slopes = np.diff(values) * n
        idx = np.clip(np.floor(s * n).astype(int), 0, n - 1)
        return slopes[idx]

    def lipschitz(self, x_samples=None, n=2001):
        s = np.linspace(0.0, 1.0, n)
        if self.homogeneous or x_samples is None:
            return float(np.max(np.abs(self.derivative(s))))
        x = np.asarray(x_samples, dtype=float).reshape(-1, 1, x_samples.shape[-1])
        return float(np.max(np.abs(self.derivative(s[None, :], x))))

    def describe(self):
        return {"kind": self.kind, **{k: (list(v) if isinstance(v, tuple) else v)
                                      for k, v in self.params.items()}}


# ---------------------------------------------------------------------------
# coefficient catalog


def _const_matrix(mat):
    mat = np.asarray(mat, dtype=float)

    def diffusion(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(mat, x.shape[:-1] + mat.shape).copy()

    return diffusion


def _periodic_scalar(a0, amplitude, axis, dim):
    eye = np.eye(dim)

    def diffusion(x):
        x = np.asarray(x, dtype=float)
        a = a0 + amplitude * np.sin(TWO_PI * x[..., axis])
        return a[..., None, None] * eye

    return diffusion


def diffusion_from_catalog(name, dim, **params):
    """Return ``(evaluator, constant)`` for a named diffusion matrix."""
    if name == "identity":
        return _const_matrix(np.eye(dim)), True
    if name == "diagonal":
        d = np.asarray(params.get("d", [1.0] * dim), dtype=float)
        if d.size != dim:
            raise StructuralError("diagonal entries do not match the dimension")
        return _const_matrix(np.diag(d)), True
    if name == "constant":
        mat = np.asarray(params["matrix"], dtype=float).reshape(dim, dim)
        return _const_matrix(mat), True
    if name == "periodic-scalar":
        return _periodic_scalar(float(params.get("a0", 1.0)), float(params.get("amplitude", 0.5)),
                                int(params.get("axis", 0)), dim), False
    raise DomainError(f"unknown diffusion {name!r}")


def drift_from_catalog(name, dim, **params):
    """Return ``(evaluator, zero)`` for a named drift field."""
    beta = float(params.get("beta", 1.0))
    if name == "zero":
        def drift(x):
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape)
        return drift, True
    if name == "shear":
        if dim != 2:
            raise DomainError("shear drift is two-dimensional")

        def drift(x):
            x = np.asarray(x, dtype=float)
            return np.stack([beta * np.sin(TWO_PI * x[..., 1]),
                             beta * np.sin(TWO_PI * x[..., 0])], axis=-1)
        return drift, False
    if name == "cellular":
        if dim != 2:
            raise DomainError("cellular drift is two-dimensional")

        def drift(x):
            x = np.asarray(x, dtype=float)
            s1, c1 = np.sin(TWO_PI * x[..., 0]), np.cos(TWO_PI * x[..., 0])
            s2, c2 = np.sin(TWO_PI * x[..., 1]), np.cos(TWO_PI * x[..., 1])
            return np.stack([beta * s1 * c2, -beta * c1 * s2], axis=-1)
        return drift, False
    if name == "constant":
        v = np.asarray(params.get("v", [beta] + [0.0] * (dim - 1)), dtype=float)

        def drift(x):
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(v, x.shape).copy()
        return drift, False
    if name == "linear-x1":
        def drift(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape)
            out[..., 0] = x[..., 0]
            return out
        return drift, False
    raise DomainError(f"unknown drift {name!r}")


@dataclass(frozen=True, eq=False)
class PeriodicMedium:
    """Coefficients of ``u_t = div(A grad u) + q . grad u + f(x, u)`` on a 1-periodic lattice.

    ``diffusion`` maps points of shape ``(..., N)`` to matrices ``(..., N, N)`` and
    ``drift`` maps them to vectors ``(..., N)``.
    """

    dim: int
    reaction: ReactionSpec
    diffusion: Optional[Callable] = None
    drift: Optional[Callable] = None
    resolution: int = 32
    delta: float = 0.05
    constant_diffusion: bool = True
    zero_drift: bool = True
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DomainError("only N = 1 and N = 2 are supported")
        if self.resolution < 2:
            raise DomainError("cell resolution must be at least 2")
        if self.diffusion is None:
            object.__setattr__(self, "diffusion", _const_matrix(np.eye(self.dim)))
        if self.drift is None:
            object.__setattr__(self, "drift", drift_from_catalog("zero", self.dim)[0])

    @classmethod
    def from_catalog(cls, dim, reaction, diffusion="identity", drift="zero",
                     diffusion_params=None, drift_params=None, resolution=32, delta=0.05):
        diffusion_params = dict(diffusion_params or {})
        drift_params = dict(drift_params or {})
        a, const = diffusion_from_catalog(diffusion, dim, **diffusion_params)
        q, zero = drift_from_catalog(drift, dim, **drift_params)
        labels = {"diffusion": diffusion, "diffusion_params": diffusion_params,
                  "drift": drift, "drift_params": drift_params}
        return cls(dim, reaction, a, q, resolution, delta, const, zero, labels)

    @property
    def homogeneous(self) -> bool:
        """True when nothing depends on x."""
        return self.constant_diffusion and self.zero_drift and self.reaction.homogeneous

    def cell_points(self, endpoint=False):
        """Cell samples ``k / M``; shape ``(M[+1],) * N + (N,)``."""
        m = self.resolution
        ticks = np.arange(m + 1 if endpoint else m) / m
        mesh = np.meshgrid(*([ticks] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1)

    def sample_diffusion(self, x):
        x = np.asarray(x, dtype=float)
        a = np.asarray(self.diffusion(x), dtype=float)
        if a.shape != x.shape[:-1] + (self.dim, self.dim):
            raise StructuralError(f"diffusion returned shape {a.shape} for points {x.shape}")
        return a

    def sample_drift(self, x):
        x = np.asarray(x, dtype=float)
        q = np.asarray(self.drift(x), dtype=float)
        if q.shape != x.shape:
            raise StructuralError(f"drift returned shape {q.shape} for points {x.shape}")
        return q

    def max_drift(self):
        return float(np.max(np.abs(self.sample_drift(self.cell_points(endpoint=True))), initial=0.0))

    def max_diffusion(self):
        a = self.sample_diffusion(self.cell_points(endpoint=True))
        return float(np.max(np.linalg.eigvalsh(a)))

    def lipschitz(self):
        return self.reaction.lipschitz(self.cell_points())

    def describe(self):
        return {"dim": self.dim, "resolution": self.resolution, "delta": self.delta,
                "reaction": self.reaction.describe(), **self.labels}


def homogeneous_medium(reaction, dim=1, diagonal=None, resolution=8, delta=0.05):
    """Constant-coefficient medium with ``A = diag(diagonal)`` (identity by default)."""
    if diagonal is None:
        return PeriodicMedium.from_catalog(dim, reaction, resolution=resolution, delta=delta)
    return PeriodicMedium.from_catalog(dim, reaction, diffusion="diagonal",
                                       diffusion_params={"d": list(diagonal)},
                                       resolution=resolution, delta=delta)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {c.name: {"passed": c.passed, "residual": c.residual} for c in self.checks}


def validate_medium(m: PeriodicMedium, tol_div=1e-8, tol_avg=1e-8, tol_periodic=1e-12):
    """Pointwise and stencil checks of the standing assumptions on the cell grid."""
    n, res = m.dim, m.resolution
    h = 1.0 / res
    pts = m.cell_points()
    a = m.sample_diffusion(pts)
    q = m.sample_drift(pts)
    checks = []

    sym = float(np.max(np.abs(a - np.swapaxes(a, -1, -2))))
    lam_min = float(np.min(np.linalg.eigvalsh(0.5 * (a + np.swapaxes(a, -1, -2)))))
    checks.append(Check("symmetric", sym <= 1e-14 * max(1.0, float(np.max(np.abs(a)))), sym))
    checks.append(Check("ellipticity", lam_min > 0.0, lam_min))

    scale = max(float(np.max(np.abs(q), initial=0.0)), 1.0)
    div = np.zeros(pts.shape[:-1])
    for k in range(n):
        step = np.zeros(n)
        step[k] = h
        div += (m.sample_drift(pts + step)[..., k] - m.sample_drift(pts - step)[..., k]) / (2 * h)
    div_res = float(np.max(np.abs(div)))
    checks.append(Check("divergence-free", div_res <= tol_div * scale, div_res))

    avg = np.abs(q.reshape(-1, n).mean(axis=0))
    avg_res = float(np.max(avg))
    checks.append(Check("zero-average", avg_res <= tol_avg * scale, avg_res))

    per_res = 0.0
    full = m.cell_points(endpoint=True)
    for k in range(n):
        lo = np.take(full, 0, axis=k)
        hi = lo.copy()
        hi[..., k] += 1.0
        per_res = max(per_res,
                      float(np.max(np.abs(m.sample_diffusion(hi) - m.sample_diffusion(lo)))),
                      float(np.max(np.abs(m.sample_drift(hi) - m.sample_drift(lo)))))
        if not m.reaction.homogeneous:
            s = np.linspace(0.0, 1.0, 11)
            per_res = max(per_res, float(np.max(np.abs(
                m.reaction(s[:, None], hi.reshape(1, -1, n)) - m.reaction(s[:, None], lo.reshape(1, -1, n))))))
    checks.append(Check("periodicity", per_res <= tol_periodic * max(scale, 1.0), per_res))

    flat = pts.reshape(-1, n)
    f0 = m.reaction(np.zeros(len(flat)), flat)
    f1 = m.reaction(np.ones(len(flat)), flat)
    end_res = float(max(np.max(np.abs(f0)), np.max(np.abs(f1))))
    checks.append(Check("endpoint-zeros", end_res == 0.0, end_res))
    return ValidationReport(tuple(checks))


@dataclass(frozen=True)
class StabilityResult:
    holds: bool
    witness: Optional[tuple] = None

    def __bool__(self):
        return self.holds


def check_weak_stability(m, delta=None, n_s=201):
    """Sign scan of ``d_s f``: non-positive on ``[0, delta]``, negative on ``[1 - delta, 1]``.

    The witness is the first violating ``(x, s)`` in scan order.
    """
    delta = m.delta if delta is None else float(delta)
    if not 0.0 < delta < 0.5:
        raise DomainError("delta must lie in (0, 1/2)")
    flat = m.cell_points().reshape(-1, m.dim)
    if m.reaction.homogeneous:
        flat = flat[:1]
    low = np.linspace(0.0, delta, n_s)
    high = np.linspace(1.0 - delta, 1.0, n_s)
    for s_grid, strict in ((low, False), (high, True)):
        d = m.reaction.derivative(s_grid[None, :], flat[:, None, :])
        d = np.broadcast_to(d, (len(flat), n_s))
        bad = d >= 0.0 if strict else d > 0.0
        if bad.any():
            i, j = np.argwhere(bad)[0]
            return StabilityResult(False, (tuple(flat[i]), float(s_grid[j])))
    return StabilityResult(True, None)


def check_homogeneous_invasion(f: ReactionSpec, n=2000):
    """True iff f > 0 on some [theta, 1) and the tail integrals of f stay positive."""
    if not f.homogeneous:
        raise DomainError("invasion criterion applies to x-independent reactions")
    s = np.linspace(0.0, 1.0, n + 1)
    vals = f(s[:-1])
    nonpos = np.flatnonzero(vals <= 0.0)
    first_pos = 0 if nonpos.size == 0 else nonpos[-1] + 1
    if first_pos >= n:
        return False
    pieces = np.array([integrate.quad(f, s[k], s[k + 1], epsabs=1e-15, epsrel=1e-12)[0]
                       for k in range(first_pos)])
    tail = integrate.quad(f, s[first_pos], 1.0, epsabs=1e-15, epsrel=1e-12)[0]
    suffix = tail + np.cumsum(pieces[::-1])[::-1] if first_pos else np.array([tail])
    tol = 1e-12 * max(float(np.max(np.abs(f(s)))), 1e-300)
    return bool(np.min(suffix) > tol)


class _MappedReaction:
    """Reaction seen through an orthogonal lattice map ``x -> T x``."""

    def __init__(self, base, inverse):
        self.base = base
        self.inverse = inverse
        self.kind = base.kind
        self.params = base.params

    @property
    def homogeneous(self):
        return self.base.homogeneous

    def _pull(self, x):
        return None if x is None else np.asarray(x, dtype=float) @ self.inverse.T

    def __call__(self, s, x=None):
        return self.base(s, self._pull(x))

    def derivative(self, s, x=None):
        return self.base.derivative(s, self._pull(x))

    def threshold(self, x=None):
        return self.base.threshold(self._pull(x))

    def lipschitz(self, x_samples=None, n=2001):
        return self.base.lipschitz(None if x_samples is None else self._pull(x_samples), n)

    def describe(self):
        return self.base.describe()


def transform_medium(m: PeriodicMedium, T):
    """Medium seen in coordinates ``y = T x`` for a signed permutation matrix ``T``.

    If ``u`` solves the equation in ``m`` then ``u(T^-1 y)`` solves it in the
    returned medium, and a front in direction ``e`` becomes one in ``T e``.
    """
    T = np.asarray(T, dtype=float)
    if T.shape != (m.dim, m.dim) or not np.allclose(T @ T.T, np.eye(m.dim)) or not np.allclose(T, np.round(T)):
        raise DomainError("T must be a signed permutation matrix")
    inv = T.T
    a, q = m.diffusion, m.drift

    def diffusion(y):
        x = np.asarray(y, dtype=float) @ inv.T
        return T @ a(x) @ T.T

    def drift(y):
        x = np.asarray(y, dtype=float) @ inv.T
        return q(x) @ T.T

    reaction = m.reaction if m.reaction.homogeneous else _MappedReaction(m.reaction, inv)
    labels = dict(m.labels, transform=T.tolist())
    return PeriodicMedium(m.dim, reaction, diffusion, drift, m.resolution, m.delta,
                          m.constant_diffusion, m.zero_drift, labels)
