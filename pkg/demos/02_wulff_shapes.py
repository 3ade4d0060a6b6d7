"""Wulff shapes from speed tables.

A constant table gives a disk, c(nu) = sqrt(nu . A nu) gives the ellipse with
semi-axes sqrt(A_ii), and c(nu) = |nu_1| + |nu_2| gives a square whose corners
carry a fan of minimising directions.
"""

import numpy as np

from frontlab.geometry import unit_circle
from frontlab.wulff import regular_fg_check, wulff_shape

d = unit_circle(1024)
tables = {
    "disk": np.full(len(d), 0.5),
    "ellipse": np.sqrt(d[:, 0] ** 2 + 4 * d[:, 1] ** 2),
    "square": np.abs(d).sum(axis=1),
}
for name, c in tables.items():
    W = wulff_shape((d, c), n_eval=256)
    fg = regular_fg_check(W, boundary_samples=32)
    print(f"{name:8s} w(e1)={W.radius([1, 0]):.4f} w(e2)={W.radius([0, 1]):.4f} "
          f"w(diag)={W.radius(np.array([1, 1]) / np.sqrt(2)):.4f} convex={W.is_convex()} "
          f"max FG residual={fg.max_residual:.1e}")
