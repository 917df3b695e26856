"""Convex polygon geometry for the planar bin simulator.

Polygons are (N, 2) float64 arrays of counterclockwise vertices in meters.
The contact helpers run inside the push sub-step loop, so they use scalar
loops: polygons have at most 8 vertices and numpy overhead dominates at
that size. All functions are pure and deterministic.
"""
from __future__ import annotations

import math

import numpy as np


def polygon_area(verts: np.ndarray) -> float:
    """Signed shoelace area (positive for CCW vertex order)."""
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(verts: np.ndarray) -> np.ndarray:
    x, y = verts[:, 0], verts[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    a = 0.5 * np.sum(cross)
    if abs(a) < 1e-14:
        return verts.mean(axis=0)
    cx = np.sum((x + np.roll(x, -1)) * cross) / (6.0 * a)
    cy = np.sum((y + np.roll(y, -1)) * cross) / (6.0 * a)
    return np.array([cx, cy])


def transform(verts: np.ndarray, pose: tuple[float, float, float]) -> np.ndarray:
    """Rotate by theta then translate by (x, y)."""
    x, y, th = pose
    c, s = math.cos(th), math.sin(th)
    rot = np.array([[c, -s], [s, c]])
    return verts @ rot.T + np.array([x, y])


def point_in_convex(verts: np.ndarray, p, tol: float = 0.0) -> bool:
    px, py = float(p[0]), float(p[1])
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        if (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0) < -tol:
            return False
    return True


def point_polygon_distance(verts: np.ndarray, p) -> float:
    """Euclidean distance from point to convex polygon; 0 if inside."""
    px, py = float(p[0]), float(p[1])
    n = len(verts)
    inside = True
    best = math.inf
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        rx, ry = px - x0, py - y0
        if ex * ry - ey * rx < 0.0:
            inside = False
        ll = ex * ex + ey * ey
        t = (rx * ex + ry * ey) / ll if ll > 0.0 else 0.0
        t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
        dx, dy = rx - t * ex, ry - t * ey
        d2 = dx * dx + dy * dy
        if d2 < best:
            best = d2
    return 0.0 if inside else math.sqrt(best)


def polygon_polygon_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between convex polygons; 0 if they intersect.

    For disjoint convex polygons the closest pair is vertex-to-edge or
    vertex-to-vertex, so checking vertices of each against the other is exact.
    """
    if polygons_overlap(a, b):
        return 0.0
    d = min(min(point_polygon_distance(b, p) for p in a),
            min(point_polygon_distance(a, q) for q in b))
    return float(d)


def _edge_normals(verts: np.ndarray) -> list[tuple[float, float]]:
    out = []
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        ll = math.hypot(ex, ey)
        if ll > 1e-12:
            out.append((ey / ll, -ex / ll))  # outward for CCW
    return out


def _project(verts: np.ndarray, nx: float, ny: float) -> tuple[float, float]:
    lo = hi = verts[0][0] * nx + verts[0][1] * ny
    for i in range(1, len(verts)):
        v = verts[i][0] * nx + verts[i][1] * ny
        if v < lo:
            lo = v
        elif v > hi:
            hi = v
    return lo, hi


def polygons_overlap(a: np.ndarray, b: np.ndarray, slack: float = 0.0) -> bool:
    """SAT overlap test; slack > 0 treats near-touching as separated."""
    for nx, ny in _edge_normals(a) + _edge_normals(b):
        a0, a1 = _project(a, nx, ny)
        b0, b1 = _project(b, nx, ny)
        if a1 <= b0 + slack or b1 <= a0 + slack:
            return False
    return True


def separation_along(a: np.ndarray, b: np.ndarray, d: np.ndarray) -> float:
    """Minimal t >= 0 so that b + t*d no longer overlaps a (exact, via SAT).

    Returns 0.0 when the polygons are already separated and inf when no
    candidate axis can separate them along d.
    """
    if not polygons_overlap(a, b):
        return 0.0
    dx, dy = float(d[0]), float(d[1])
    best = math.inf
    for nx, ny in _edge_normals(a) + _edge_normals(b):
        nd = nx * dx + ny * dy
        if abs(nd) < 1e-12:
            continue
        a0, a1 = _project(a, nx, ny)
        b0, b1 = _project(b, nx, ny)
        t = (a1 - b0) / nd if nd > 0.0 else (b1 - a0) / (-nd)
        if 0.0 <= t < best:
            best = t
    return best


def disc_separation_along(center: np.ndarray, radius: float,
                          verts: np.ndarray, d: np.ndarray) -> float:
    """Minimal t >= 0 so that polygon verts + t*d clears a disc.

    Relative to the polygon the disc center travels along -d; the exit
    time from the radius-inflated polygon lies either on an offset edge
    plane or on a vertex arc, so candidates are closed-form. A bisection
    on the (convex along the ray) clearance function is the fallback for
    degenerate candidate sets.
    """
    cx, cy = float(center[0]), float(center[1])
    dx, dy = float(d[0]), float(d[1])
    if point_polygon_distance(verts, (cx, cy)) >= radius:
        return 0.0
    cands: list[float] = []
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        ex, ey = x1 - x0, y1 - y0
        ll = math.hypot(ex, ey)
        if ll < 1e-12:
            continue
        nx, ny = ey / ll, -ex / ll
        nd = nx * dx + ny * dy
        if nd < -1e-12:
            # crossing the offset edge plane from inside
            t = ((cx - x0) * nx + (cy - y0) * ny - radius) / nd
            if t > 0.0:
                cands.append(t)
    for vx, vy in verts:
        # |c - v - t*d|^2 = r^2, |d| = 1
        bq = (cx - vx) * dx + (cy - vy) * dy
        cq = (cx - vx) ** 2 + (cy - vy) ** 2 - radius * radius
        disc = bq * bq - cq
        if disc >= 0.0:
            t = bq + math.sqrt(disc)
            if t > 0.0:
                cands.append(t)
    valid = [t for t in sorted(cands)
             if abs(point_polygon_distance(verts + np.array([t * dx, t * dy]),
                                           (cx, cy)) - radius) < 1e-9]
    if valid:
        return valid[0]

    def gap(t: float) -> float:
        return point_polygon_distance(verts + np.array([t * dx, t * dy]),
                                      (cx, cy)) - radius

    hi = float(np.ptp(verts, axis=0).max()) + 2.0 * radius + 1e-3
    for _ in range(16):
        if gap(hi) >= 0.0:
            break
        hi *= 2.0
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if gap(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def clip_convex(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman intersection of two convex polygons (CCW)."""
    out = [tuple(v) for v in subject]
    nsub = len(clipper)
    for i in range(nsub):
        if not out:
            break
        cx, cy = clipper[i]
        nx_, ny_ = clipper[(i + 1) % nsub]
        ex, ey = nx_ - cx, ny_ - cy
        inp = out
        out = []
        prev = inp[-1]
        prev_in = ex * (prev[1] - cy) - ey * (prev[0] - cx) >= 0.0
        for cur in inp:
            cur_in = ex * (cur[1] - cy) - ey * (cur[0] - cx) >= 0.0
            if cur_in != prev_in:
                ddx, ddy = cur[0] - prev[0], cur[1] - prev[1]
                denom = ex * ddy - ey * ddx
                if abs(denom) > 1e-300:
                    t = (ey * (prev[0] - cx) - ex * (prev[1] - cy)) / denom
                    out.append((prev[0] + t * ddx, prev[1] + t * ddy))
            if cur_in:
                out.append(cur)
            prev, prev_in = cur, cur_in
    if len(out) < 3:
        return np.zeros((0, 2))
    return np.array(out)


def intersection_area(a: np.ndarray, b: np.ndarray) -> float:
    poly = clip_convex(a, b)
    if poly.shape[0] < 3:
        return 0.0
    return abs(polygon_area(poly))


def polygon_width_along(verts: np.ndarray, angle: float) -> float:
    """Extent of the polygon projected on the axis at the given angle."""
    lo, hi = _project(verts, math.cos(angle), math.sin(angle))
    return hi - lo


def rectangle(center: np.ndarray, length: float, width: float, angle: float) -> np.ndarray:
    """CCW rectangle with long side of `length` along `angle`."""
    c, s = math.cos(angle), math.sin(angle)
    u = np.array([c, s]) * (0.5 * length)
    v = np.array([-s, c]) * (0.5 * width)
    return np.array([center - u - v, center + u - v, center + u + v, center - u + v])
