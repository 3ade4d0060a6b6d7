"""Principal eigenvalue of the exponentially twisted cell operator.

For a direction ``e`` and ``lam >= 0`` the operator acts on periodic functions as
``phi -> exp(lam x.e) L(exp(-lam x.e) phi)`` where ``L = div(A grad) + q . grad``.
It is built from the solver's own stencils on the periodic cell, so the
conjugation identity holds entry by entry.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from frontlab.errors import DomainError, NumericError, StructuralError
from frontlab.solver import Grid, discretize


@dataclass
class EigenPair:
    direction: np.ndarray
    lam: float
    k: float
    phi: np.ndarray
    iterations: int
    residual: float

    @property
    def resolution(self):
        return self.phi.shape[0]


def cell_grid(m, resolution=None):
    res = m.resolution if resolution is None else int(resolution)
    return Grid((0.0,) * m.dim, (res,) * m.dim, 1.0 / res, periodic=(True,) * m.dim)


def _unit(e, dim):
    e = np.atleast_1d(np.asarray(e, dtype=float))
    if e.shape != (dim,):
        raise StructuralError(f"direction must have {dim} components")
    if abs(np.linalg.norm(e) - 1.0) > 1e-9:
        raise DomainError("direction must be a unit vector")
    return e


def twisted_operator(m, e, lam, resolution=None):
    """Sparse matrix of the twisted operator on the periodic cell grid."""
    e = _unit(e, m.dim)
    grid = cell_grid(m, resolution)
    disc = discretize(m, grid)
    op = (disc.diffusion + disc.drift).tocoo()
    x = disc.nodes
    d = x[op.col] - x[op.row]
    d -= np.round(d)  # unwrapped stencil displacement
    weights = np.exp(-lam * (d @ e))
    return sp.csr_matrix((op.data * weights, (op.row, op.col)), shape=op.shape), grid


def principal_eigenvalue(m, e, lam, resolution=None, tol=1e-10, max_iter=200000, check_every=25):
    """Eigenvalue of maximal real part by shifted inverse power iteration.

    The shift is one plus the upper Gershgorin bound, which makes the principal
    eigenvalue dominant for the inverted operator. The returned eigenfunction is
    positive and normalised by ``max phi = 1``.
    """
    if lam < 0:
        raise DomainError("lambda must be non-negative")
    e = _unit(e, m.dim)
    op, grid = twisted_operator(m, e, lam, resolution)
    n = op.shape[0]
    diag = op.diagonal()
    off = np.asarray(abs(op).sum(axis=1)).ravel() - np.abs(diag)
    sigma = float(np.max(diag + off)) + 1.0
    lu = spla.splu((sigma * sp.identity(n, format="csc") - op).tocsc())
    scale = max(float(np.max(np.abs(diag))), 1.0)

    phi = np.ones(n)
    k_old = np.inf
    for it in range(1, max_iter + 1):
        phi = lu.solve(phi)
        phi /= np.max(np.abs(phi))
        if it % check_every == 0 or it == 1:
            lphi = op @ phi
            k = float(phi @ lphi / (phi @ phi))
            res = float(np.max(np.abs(lphi - k * phi)))
            if res <= tol * scale and abs(k - k_old) <= tol * scale:
                break
            k_old = k
    else:
        raise NumericError(f"power iteration did not converge in {max_iter} steps", residual=res)
    if np.min(phi) <= 0.0:
        phi = -phi if np.max(phi) <= 0.0 else phi
    return EigenPair(e, float(lam), k, phi.reshape(grid.shape), it, res)


def eigenfunction_residual(pair: EigenPair, m):
    """Sup-norm residual of the discrete eigen-equation."""
    op, grid = twisted_operator(m, pair.direction, pair.lam, pair.resolution)
    phi = np.asarray(pair.phi, dtype=float).ravel()
    if phi.size != op.shape[0]:
        raise StructuralError("eigenfunction does not match the cell grid")
    return float(np.max(np.abs(op @ phi - pair.k * phi)))


@dataclass
class SlopeReport:
    lams: np.ndarray
    ratios: np.ndarray
    eigenvalues: np.ndarray
    slope_tol: float
    passed: bool

    def rows(self):
        return [{"lambda": float(l), "k": float(k), "ratio": float(r)}
                for l, k, r in zip(self.lams, self.eigenvalues, self.ratios)]


def slope_check(m, e, lam_sequence, slope_tol=None, resolution=None):
    """Table of ``|k_e(lam)| / lam`` along a sequence decreasing to zero.

    Passes iff the ratios decrease strictly and the last one is at most
    ``slope_tol`` (default: half the first ratio).
    """
    lams = np.asarray(list(lam_sequence), dtype=float)
    if lams.size == 0:
        raise DomainError("empty lambda sequence")
    if np.any(lams <= 0) or np.any(np.diff(lams) >= 0):
        raise DomainError("lambda sequence must be positive and strictly decreasing")
    ks = np.array([principal_eigenvalue(m, e, lam, resolution).k for lam in lams])
    ratios = np.abs(ks) / lams
    tol = 0.5 * ratios[0] if slope_tol is None else float(slope_tol)
    passed = bool(np.all(np.diff(ratios) < 0) and ratios[-1] <= tol)
    return SlopeReport(lams, ratios, ks, tol, passed)
