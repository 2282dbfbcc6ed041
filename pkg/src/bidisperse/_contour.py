"""Zero contours of a scalar field on a rectangle, refined by bisection.

Marching squares comes from scikit-image; every vertex it emits sits on a grid
edge, so it is then moved to the exact sign change along that edge.
"""

from __future__ import annotations

import numpy as np
from skimage.measure import find_contours


def _bisect_edge(func, a: np.ndarray, b: np.ndarray, fa: float, fb: float, iters: int) -> np.ndarray:
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = float(func(m))
        if not np.isfinite(fm) or fm == 0.0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b, fb = m, fm
    # final secant step inside the bracket
    if fb != fa:
        w = fa / (fa - fb)
        return a + w * (b - a)
    return 0.5 * (a + b)


def refined_contours(func, xs: np.ndarray, ys: np.ndarray, values: np.ndarray | None = None,
                     mask: np.ndarray | None = None, iters: int = 40,
                     min_points: int = 2) -> list[np.ndarray]:
    """Zero level set of ``func`` sampled on the tensor grid ``xs`` x ``ys``.

    ``func`` maps a length-2 array to a scalar and is used only for refinement.
    ``values[i, j]`` must equal ``func((xs[i], ys[j]))`` if supplied. Returns a
    list of ``(k, 2)`` polylines in physical coordinates.
    """
    if values is None:
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        values = np.vectorize(lambda a, b: func(np.array([a, b])))(X, Y)
    values = np.asarray(values, dtype=float)
    finite = np.isfinite(values)
    if mask is None:
        mask = finite
    else:
        mask = mask & finite
    image = np.where(finite, values, 0.0)
    out = []
    for c in find_contours(image, 0.0, mask=mask):
        if len(c) < min_points:
            continue
        pts = np.empty_like(c)
        for k, (r, q) in enumerate(c):
            i0, j0 = int(np.floor(r)), int(np.floor(q))
            i0 = min(i0, len(xs) - 1)
            j0 = min(j0, len(ys) - 1)
            on_row = abs(r - round(r)) < 1e-12
            on_col = abs(q - round(q)) < 1e-12
            if on_row and on_col:
                i, j = int(round(r)), int(round(q))
                pts[k] = (xs[i], ys[j])
                continue
            if on_row:
                i = int(round(r))
                a = np.array([xs[i], ys[j0]])
                b = np.array([xs[i], ys[min(j0 + 1, len(ys) - 1)]])
                fa, fb = values[i, j0], values[i, min(j0 + 1, len(ys) - 1)]
            else:
                j = int(round(q))
                a = np.array([xs[i0], ys[j]])
                b = np.array([xs[min(i0 + 1, len(xs) - 1)], ys[j]])
                fa, fb = values[i0, j], values[min(i0 + 1, len(xs) - 1), j]
            if np.sign(fa) == np.sign(fb) or fa == 0.0 or fb == 0.0:
                x = np.interp(r, np.arange(len(xs)), xs)
                y = np.interp(q, np.arange(len(ys)), ys)
                pts[k] = (x, y)
                continue
            pts[k] = _bisect_edge(func, a, b, fa, fb, iters)
        out.append(pts)
    return out
