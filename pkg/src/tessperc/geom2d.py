"""Exact-ish planar convex geometry used by every other module.

All faces handled here are points, segments or strictly convex CCW
polygons.  One epsilon (EPS) governs degeneracy decisions throughout the
package; nothing else hides its own tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EPS = 1e-9


@dataclass(frozen=True)
class FaceGeometry:
    """Geometry of a k-face: a point (dim 0), segment (dim 1) or convex
    polygon (dim 2, CCW).  coords has shape (1,2), (2,2) or (m,2)."""

    dim: int
    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        object.__setattr__(self, "coords", c)
        if c.ndim != 2 or c.shape[1] != 2:
            raise ValueError("coords must be (m, 2)")
        need = {0: 1, 1: 2, 2: 3}[self.dim]
        if c.shape[0] < need:
            raise ValueError(f"dim {self.dim} face needs >= {need} points")


@dataclass(frozen=True)
class Window:
    """Observation window W_t = t^(1/2) * W for a convex base polygon W.

    The base polygon should contain the origin in its interior so that
    scaling by t grows the window around the origin.
    """

    polygon: np.ndarray
    scale_t: float = 1.0
    offset: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        poly = np.asarray(self.polygon, dtype=np.float64)
        object.__setattr__(self, "polygon", poly)
        object.__setattr__(self, "offset", np.asarray(self.offset, dtype=np.float64))
        if self.scale_t <= 0:
            raise ValueError("scale_t must be positive")
        if not is_strictly_convex_ccw(poly):
            raise ValueError("window polygon must be strictly convex and CCW")

    @property
    def poly(self) -> np.ndarray:
        return self.polygon * np.sqrt(self.scale_t) + self.offset

    @property
    def area(self) -> float:
        return polygon_area(self.poly)

    def shifted(self, delta) -> "Window":
        return Window(self.polygon, self.scale_t, self.offset + np.asarray(delta))

    def as_rect(self):
        """(x0, y0, x1, y1) if the window is an axis-aligned rectangle, else None."""
        p = self.poly
        if len(p) != 4:
            return None
        x0, y0 = p.min(axis=0)
        x1, y1 = p.max(axis=0)
        ref = {(x0, y0), (x1, y0), (x1, y1), (x0, y1)}
        got = {(round(a, 12), round(b, 12)) for a, b in p}
        refr = {(round(a, 12), round(b, 12)) for a, b in ref}
        return (x0, y0, x1, y1) if got == refr else None


def unit_square_window(scale_t: float = 1.0) -> Window:
    """Volume-one square centered at the origin, the default W."""
    half = 0.5
    poly = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    return Window(poly, scale_t)


def polygon_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_perimeter(poly: np.ndarray) -> float:
    d = np.roll(poly, -1, axis=0) - poly
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def is_strictly_convex_ccw(poly: np.ndarray, eps: float = EPS) -> bool:
    """True if poly is a CCW simple polygon with strictly convex corners.

    Tolerance is relative to the edge lengths so large and small faces are
    judged alike.
    """
    n = len(poly)
    if n < 3:
        return False
    prev = poly - np.roll(poly, 1, axis=0)
    nxt = np.roll(poly, -1, axis=0) - poly
    cross = prev[:, 0] * nxt[:, 1] - prev[:, 1] * nxt[:, 0]
    scale = np.hypot(prev[:, 0], prev[:, 1]) * np.hypot(nxt[:, 0], nxt[:, 1])
    if np.any(scale <= 0):
        return False
    return bool(np.all(cross > eps * scale))


def intrinsic_volumes(geom: FaceGeometry) -> tuple[float, float, float]:
    """(V0, V1, V2) of a convex face.

    V0 = 1 for any non-empty convex body; V1 is the length for a segment
    and half the boundary length for a 2-dimensional body; V2 is the area.
    """
    if geom.dim == 0:
        return (1.0, 0.0, 0.0)
    if geom.dim == 1:
        a, b = geom.coords[0], geom.coords[1]
        return (1.0, float(np.hypot(*(b - a))), 0.0)
    if geom.dim == 2:
        area = polygon_area(geom.coords)
        if area <= 0:
            raise ValueError("degenerate polygon (non-positive area)")
        return (1.0, 0.5 * polygon_perimeter(geom.coords), area)
    raise ValueError(f"bad dim {geom.dim}")


def steiner_point(geom: FaceGeometry) -> np.ndarray:
    """Steiner point: the vertex itself, the segment midpoint, or the
    exterior-angle-weighted vertex mean of a convex polygon."""
    if geom.dim == 0:
        return geom.coords[0].copy()
    if geom.dim == 1:
        return 0.5 * (geom.coords[0] + geom.coords[1])
    return polygon_steiner(geom.coords)


def polygon_steiner(poly: np.ndarray) -> np.ndarray:
    prev = poly - np.roll(poly, 1, axis=0)
    nxt = np.roll(poly, -1, axis=0) - poly
    cross = prev[:, 0] * nxt[:, 1] - prev[:, 1] * nxt[:, 0]
    dot = prev[:, 0] * nxt[:, 0] + prev[:, 1] * nxt[:, 1]
    beta = np.arctan2(cross, dot)  # exterior angles, sum = 2*pi
    return (beta[:, None] * poly).sum(axis=0) / (2.0 * np.pi)


# ---------------------------------------------------------------------------
# clipping


def clip_polygon(subject: np.ndarray, clip: np.ndarray, eps: float = EPS):
    """Sutherland-Hodgman clip of a convex CCW polygon against a convex CCW
    polygon.  Returns the clipped CCW polygon or None when the overlap has
    no area."""
    out = subject
    m = len(clip)
    for i in range(m):
        a = clip[i]
        b = clip[(i + 1) % m]
        ex, ey = b[0] - a[0], b[1] - a[1]
        # signed distance (scaled): >= 0 means inside the half-plane
        d = ex * (out[:, 1] - a[1]) - ey * (out[:, 0] - a[0])
        if np.all(d >= 0):
            continue
        if np.all(d <= 0):
            return None
        nxt = []
        n = len(out)
        for j in range(n):
            k = (j + 1) % n
            dj, dk = d[j], d[k]
            if dj >= 0:
                nxt.append(out[j])
            if (dj > 0 and dk < 0) or (dj < 0 and dk > 0):
                t = dj / (dj - dk)
                nxt.append(out[j] + t * (out[k] - out[j]))
        if len(nxt) < 3:
            return None
        out = np.asarray(nxt)
    out = _dedupe_ring(out, eps)
    if out is None or len(out) < 3:
        return None
    if polygon_area(out) <= eps * eps:
        return None
    return out


def _dedupe_ring(poly: np.ndarray, eps: float):
    keep = []
    n = len(poly)
    for i in range(n):
        if not keep or np.hypot(*(poly[i] - keep[-1])) > eps:
            keep.append(poly[i])
    if len(keep) > 1 and np.hypot(*(keep[0] - keep[-1])) <= eps:
        keep.pop()
    if len(keep) < 3:
        return None
    return np.asarray(keep)


def clip_segment(a: np.ndarray, b: np.ndarray, clip: np.ndarray,
                 eps: float = EPS):
    """Clip segment [a, b] to a convex CCW polygon.

    Returns (p, q, hits) or None when the intersection is empty or a single
    point.  `hits` counts clip-boundary points strictly interior to the
    original segment (0, 1 or 2), the per-segment contribution to the
    edge/boundary crossing count.
    """
    d = b - a
    t0, t1 = 0.0, 1.0
    m = len(clip)
    for i in range(m):
        u = clip[i]
        v = clip[(i + 1) % m]
        ex, ey = v[0] - u[0], v[1] - u[1]
        f0 = ex * (a[1] - u[1]) - ey * (a[0] - u[0])
        df = ex * d[1] - ey * d[0]
        if abs(df) < 1e-300:
            if f0 < 0:
                return None
            continue
        t = -f0 / df
        if df > 0:  # entering
            if t > t0:
                t0 = t
        else:  # leaving
            if t < t1:
                t1 = t
        if t0 >= t1:
            return None
    seg_len = np.hypot(*d)
    if (t1 - t0) * seg_len <= eps:
        return None
    teps = eps / max(seg_len, eps)
    hits = int(t0 > teps) + int(t1 < 1.0 - teps)
    return a + t0 * d, a + t1 * d, hits


def chord_in_polygon(poly: np.ndarray, a: np.ndarray, b: np.ndarray,
                     eps: float = EPS):
    """Intersection of convex CCW polygon with segment [a, b] as a
    sub-segment (p, q), or None if empty / a single point."""
    res = clip_segment(a, b, poly, eps)
    if res is None:
        return None
    return res[0], res[1]


# ---------------------------------------------------------------------------
# intersection predicates (no clipping; used by the independent Euler oracle)


def point_in_convex(pt: np.ndarray, poly: np.ndarray, eps: float = 0.0) -> bool:
    """Point in closed convex CCW polygon (eps > 0 loosens the test)."""
    b = np.roll(poly, -1, axis=0)
    d = (b[:, 0] - poly[:, 0]) * (pt[1] - poly[:, 1]) \
        - (b[:, 1] - poly[:, 1]) * (pt[0] - poly[:, 0])
    return bool(np.all(d >= -eps))


def _project(poly: np.ndarray, axis: np.ndarray):
    p = poly @ axis
    return p.min(), p.max()


def convex_polygons_intersect(pa: np.ndarray, pb: np.ndarray) -> bool:
    """Separating-axis test for two convex polygons (closed sets)."""
    for poly in (pa, pb):
        edges = np.roll(poly, -1, axis=0) - poly
        for ex, ey in edges:
            axis = np.array([-ey, ex])
            a0, a1 = _project(pa, axis)
            b0, b1 = _project(pb, axis)
            if a1 < b0 or b1 < a0:
                return False
    return True


def segment_intersects_convex(a: np.ndarray, b: np.ndarray,
                              poly: np.ndarray) -> bool:
    """Closed segment vs closed convex polygon, by separating axes."""
    seg = np.vstack([a, b])
    d = b - a
    axes = [np.array([-d[1], d[0]])]
    edges = np.roll(poly, -1, axis=0) - poly
    axes.extend(np.array([-ey, ex]) for ex, ey in edges)
    for axis in axes:
        n = np.hypot(*axis)
        if n == 0:
            continue
        a0, a1 = _project(seg, axis)
        b0, b1 = _project(poly, axis)
        if a1 < b0 or b1 < a0:
            return False
    return True


def point_segment_distance(pt: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    d = b - a
    L2 = float(d @ d)
    if L2 == 0:
        return float(np.hypot(*(pt - a)))
    t = float(np.clip((pt - a) @ d / L2, 0.0, 1.0))
    return float(np.hypot(*(pt - (a + t * d))))
