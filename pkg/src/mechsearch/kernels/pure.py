"""Pure numpy implementations of the hot kernels.

Used when the compiled extension is unavailable or MS_FORCE_PY=1.
Results are bit-identical to the compiled backend.
"""
from __future__ import annotations

import numpy as np

BACKEND = "pure"


def edt_squared(free: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance to the nearest non-free pixel.

    free: 2-D boolean/uint8 array, nonzero where the pixel is free space.
    Returns int64 squared pixel distances; zero exactly on source pixels.
    """
    free = np.ascontiguousarray(free, dtype=bool)
    h, w = free.shape
    if not (~free).any():
        raise ValueError("distance transform needs at least one source pixel")
    big = np.int64(h * h + w * w + 1)

    # pass 1: per column, pixel distance to nearest source in that column
    g = np.where(free, big, np.int64(0))
    for r in range(1, h):
        g[r] = np.minimum(g[r], g[r - 1] + 1)
    for r in range(h - 2, -1, -1):
        g[r] = np.minimum(g[r], g[r + 1] + 1)
    np.minimum(g, big, out=g)
    g2 = np.minimum(g, np.int64(h)) ** 2
    g2[g >= big] = big * big

    # pass 2: d2[r, c] = min_c' (g2[r, c'] + (c - c')^2), chunked over rows
    cc = np.arange(w, dtype=np.int64)
    k = (cc[:, None] - cc[None, :]) ** 2  # (c, c')
    out = np.empty((h, w), dtype=np.int64)
    chunk = max(1, (1 << 22) // (w * w))
    for r0 in range(0, h, chunk):
        sub = g2[r0:r0 + chunk]  # (R, c')
        out[r0:r0 + chunk] = (sub[:, None, :] + k[None, :, :]).min(axis=2)
    return out


def convex_mask(verts: np.ndarray, height: int, width: int) -> np.ndarray:
    """Boolean mask of integer pixel centers (x=col, y=row) inside a CCW convex polygon."""
    out = np.zeros((height, width), dtype=bool)
    if verts.shape[0] < 3:
        return out
    x0 = max(int(np.floor(verts[:, 0].min())), 0)
    x1 = min(int(np.ceil(verts[:, 0].max())) + 1, width)
    y0 = max(int(np.floor(verts[:, 1].min())), 0)
    y1 = min(int(np.ceil(verts[:, 1].max())) + 1, height)
    if x0 >= x1 or y0 >= y1:
        return out
    xs = np.arange(x0, x1, dtype=np.float64)
    ys = np.arange(y0, y1, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    inside = np.ones(gx.shape, dtype=bool)
    nxt = np.roll(verts, -1, axis=0)
    for (vx, vy), (wx, wy) in zip(verts, nxt):
        ex, ey = wx - vx, wy - vy
        inside &= ex * (gy - vy) - ey * (gx - vx) >= 0.0
    out[y0:y1, x0:x1] = inside
    return out
