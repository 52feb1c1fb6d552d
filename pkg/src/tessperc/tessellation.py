"""Planar face-to-face tessellations: construction, incidence, stars, I/O.

A tessellation is stored as a closed cell complex: vertex coordinates,
undirected edges, and convex CCW cells, with full incidence maps.  Random
models are realized on a padded sampling region around a core region; faces
whose local neighbourhood could be affected by the missing outside are
flagged untrusted, and the core region is required to contain trusted
structure only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.spatial import Voronoi

from .geom2d import (
    EPS,
    FaceGeometry,
    Window,
    clip_segment,
    is_strictly_convex_ccw,
    point_in_convex,
    point_segment_distance,
    polygon_area,
    segment_intersects_convex,
    convex_polygons_intersect,
    clip_polygon,
)
from .rng import grid_stream_seeds, poisson_counts, stream_payload, stream_uniform

ARCHIMEDEAN_CODES = ("4.4.4.4", "3.3.3.3.3.3", "6.6.6", "3.6.3.6")


class DegenerateSampleError(RuntimeError):
    """The random sample cannot support a tessellation (too few points/lines)."""


class PaddingError(RuntimeError):
    """Untrusted structure reached the core region; enlarge the padding."""


class StarTruncatedError(RuntimeError):
    """A face star is cut off by the sampling boundary."""


class FaceRef(NamedTuple):
    dim: int
    index: int


@dataclass
class GeneratorConfig:
    """Recipe for one random tessellation.

    model: "voronoi", "lattice" or "line".
    intensity: points per unit area (voronoi) or lines per unit length of
        the signed-distance axis (line).  Ignored for lattices.
    lattice_code: one of ARCHIMEDEAN_CODES for model="lattice".
    edge_length: lattice edge length.
    region: core window; all faces meeting it must come out exact.
    padding: sampling margin around the core; defaults to a model-specific
        multiple of the typical cell scale, wide enough that faces near
        the core keep two complete incidence rings.
    """

    model: str
    region: Window
    intensity: float = 1.0
    lattice_code: str = "4.4.4.4"
    edge_length: float = 1.0
    padding: Optional[float] = None
    seed: int = 0

    def resolved_padding(self) -> float:
        if self.padding is not None:
            return float(self.padding)
        if self.model == "voronoi":
            return 8.0 / np.sqrt(self.intensity)
        if self.model == "lattice":
            return 5.0 * self.edge_length
        if self.model == "line":
            # cell scale from gamma_2 = intensity^2/pi
            return 8.0 * np.sqrt(np.pi) / self.intensity
        raise ValueError(f"unknown model {self.model!r}")

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "intensity": self.intensity,
            "lattice_code": self.lattice_code,
            "edge_length": self.edge_length,
            "padding": self.padding,
            "seed": self.seed,
        }


class PlanarTessellation:
    """Cell complex with incidence, per-face geometry caches and trust flags."""

    def __init__(self, points, cells, core_region, generator=None,
                 edge_order=None, generators_xy=None):
        points = np.asarray(points, dtype=np.float64)
        if len(cells) == 0:
            raise DegenerateSampleError("no cells")
        counts = np.fromiter((len(c) for c in cells), dtype=np.int64,
                             count=len(cells))
        if counts.min() < 3:
            raise ValueError("cells need at least 3 vertices")
        flat = np.concatenate([np.asarray(c, dtype=np.int64) for c in cells])
        off = np.concatenate([[0], np.cumsum(counts)])

        # keep only vertices referenced by cells, remap indices
        used = np.zeros(len(points), dtype=bool)
        used[flat] = True
        remap = np.cumsum(used) - 1
        self.points = points[used]
        flat = remap[flat]

        nv = len(self.points)
        nc = len(cells)
        # next slot within each cell ring
        nxt = np.arange(len(flat)) + 1
        nxt[off[1:] - 1] = off[:-1]

        # orient all cells CCW
        x, y = self.points[flat, 0], self.points[flat, 1]
        xn, yn = self.points[flat[nxt], 0], self.points[flat[nxt], 1]
        area2 = np.add.reduceat(x * yn - y * xn, off[:-1])
        if np.any(area2 <= 0):
            fixed = []
            for i in range(nc):
                ring = flat[off[i]:off[i + 1]]
                fixed.append(ring[::-1] if area2[i] <= 0 else ring)
            flat = np.concatenate(fixed)
            nxt = np.arange(len(flat)) + 1
            nxt[off[1:] - 1] = off[:-1]
            x, y = self.points[flat, 0], self.points[flat, 1]
            xn, yn = self.points[flat[nxt], 0], self.points[flat[nxt], 1]
            area2 = np.add.reduceat(x * yn - y * xn, off[:-1])
            if np.any(area2 <= 0):
                raise ValueError("degenerate cell (non-positive area)")

        self.cell_off = off
        self.cell_verts = flat
        self._cell_next_slot = nxt
        self.cell_area = 0.5 * area2

        # undirected edges from consecutive vertex pairs, deduplicated
        a = flat
        b = flat[nxt]
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        key = lo.astype(np.int64) * nv + hi
        uniq, inverse = np.unique(key, return_inverse=True)
        self.edges = np.column_stack([uniq // nv, uniq % nv]).astype(np.int64)
        ne = len(self.edges)
        self.cell_edges = inverse  # aligned with cell_verts slots
        slot_cell = np.repeat(np.arange(nc), counts)

        ecount = np.bincount(inverse, minlength=ne)
        if ecount.max() > 2:
            raise ValueError("non-manifold edge (more than two incident cells)")
        order = np.argsort(inverse, kind="stable")
        starts = np.concatenate([[0], np.cumsum(ecount)])[:-1]
        self.edge_cells = np.full((ne, 2), -1, dtype=np.int64)
        cs = slot_cell[order]
        self.edge_cells[:, 0] = cs[starts]
        two = ecount == 2
        self.edge_cells[two, 1] = cs[starts[two] + 1]

        if edge_order is not None:
            self._apply_edge_order(np.asarray(edge_order, dtype=np.int64))
            ne = len(self.edges)

        # vertex -> edges / cells (CSR)
        self.v2e_idx, self.v2e_off = _csr(
            np.concatenate([self.edges[:, 0], self.edges[:, 1]]),
            np.concatenate([np.arange(ne), np.arange(ne)]), nv)
        self.v2c_idx, self.v2c_off = _csr(flat, slot_cell, nv)

        # geometry caches
        d = self.points[self.edges[:, 1]] - self.points[self.edges[:, 0]]
        self.edge_len = np.hypot(d[:, 0], d[:, 1])
        per = np.hypot(xn - x, yn - y)
        self.cell_perimeter = np.add.reduceat(per, off[:-1])
        self.cell_nverts = counts
        self.cell_steiner = self._steiner_cells(flat, nxt, off)
        self.edge_mid = 0.5 * (self.points[self.edges[:, 0]]
                               + self.points[self.edges[:, 1]])

        # bounding boxes
        pts_f = self.points[flat]
        self.cell_bbox = np.column_stack([
            np.minimum.reduceat(pts_f[:, 0], off[:-1]),
            np.minimum.reduceat(pts_f[:, 1], off[:-1]),
            np.maximum.reduceat(pts_f[:, 0], off[:-1]),
            np.maximum.reduceat(pts_f[:, 1], off[:-1]),
        ])
        e0, e1 = self.points[self.edges[:, 0]], self.points[self.edges[:, 1]]
        self.edge_bbox = np.column_stack([
            np.minimum(e0[:, 0], e1[:, 0]), np.minimum(e0[:, 1], e1[:, 1]),
            np.maximum(e0[:, 0], e1[:, 0]), np.maximum(e0[:, 1], e1[:, 1]),
        ])

        self._trust_flags()

        self.core_region = core_region
        self.generator = dict(generator) if generator else {}
        self.generators_xy = (np.asarray(generators_xy, dtype=np.float64)
                              if generators_xy is not None else None)

        if not np.all(self._convexity_margin() > 0):
            raise ValueError("non-convex or mis-ordered cell")

    # -- construction helpers ------------------------------------------------

    def _apply_edge_order(self, stored: np.ndarray):
        """Reorder edges to match a stored (n,2) list (for stable reload)."""
        nv = len(self.points)
        mine = self.edges[:, 0] * nv + self.edges[:, 1]
        lo = np.minimum(stored[:, 0], stored[:, 1])
        hi = np.maximum(stored[:, 0], stored[:, 1])
        theirs = lo * nv + hi
        if len(mine) != len(theirs) or set(mine.tolist()) != set(theirs.tolist()):
            raise ValueError("stored edge list disagrees with cell structure")
        pos = {k: i for i, k in enumerate(theirs.tolist())}
        perm = np.fromiter((pos[k] for k in mine.tolist()), dtype=np.int64,
                           count=len(mine))
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        self.edges = self.edges[inv]
        self.edge_cells = self.edge_cells[inv]
        self.cell_edges = perm[self.cell_edges]

    def _steiner_cells(self, flat, nxt, off):
        prv = np.empty_like(nxt)
        prv[nxt] = np.arange(len(flat))
        p = self.points[flat]
        d1 = p - self.points[flat[prv]]
        d2 = self.points[flat[nxt]] - p
        cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        dot = d1[:, 0] * d2[:, 0] + d1[:, 1] * d2[:, 1]
        beta = np.arctan2(cross, dot)
        sx = np.add.reduceat(beta * p[:, 0], off[:-1])
        sy = np.add.reduceat(beta * p[:, 1], off[:-1])
        return np.column_stack([sx, sy]) / (2.0 * np.pi)

    def _convexity_margin(self):
        flat, nxt = self.cell_verts, self._cell_next_slot
        prv = np.empty_like(nxt)
        prv[nxt] = np.arange(len(flat))
        p = self.points[flat]
        d1 = p - self.points[flat[prv]]
        d2 = self.points[flat[nxt]] - p
        cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        return np.minimum.reduceat(cross, self.cell_off[:-1])

    def _trust_flags(self):
        nv = len(self.points)
        edeg = np.bincount(self.edges.ravel(), minlength=nv)
        cdeg = self.v2c_off[1:] - self.v2c_off[:-1]
        self.vertex_edge_degree = edeg
        self.vertex_cell_degree = cdeg
        # closed fan around a vertex <=> equal numbers of edges and cells
        self.complete_vertex = (edeg == cdeg) & (cdeg > 0)
        self.complete_edge = self.edge_cells[:, 1] >= 0

        cv = self.complete_vertex
        cell_good = np.logical_and.reduceat(cv[self.cell_verts],
                                            self.cell_off[:-1])
        # vertex is 2nd-order good if its own fan closes and every incident
        # cell consists of complete vertices
        vgood2 = cv & np.logical_and.reduceat(cell_good[self.v2c_idx],
                                              self.v2c_off[:-1])
        self.cell_vertices_complete = cell_good
        self.trusted_vertex = vgood2
        self.trusted_edge = vgood2[self.edges[:, 0]] & vgood2[self.edges[:, 1]]
        self.trusted_cell = np.logical_and.reduceat(vgood2[self.cell_verts],
                                                    self.cell_off[:-1])

    # -- basic accessors -----------------------------------------------------

    @property
    def n_vertices(self):
        return len(self.points)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_cells(self):
        return len(self.cell_off) - 1

    def face_count(self, dim: int) -> int:
        return (self.n_vertices, self.n_edges, self.n_cells)[dim]

    def cell_vertex_ids(self, i: int) -> np.ndarray:
        return self.cell_verts[self.cell_off[i]:self.cell_off[i + 1]]

    def cell_edge_ids(self, i: int) -> np.ndarray:
        return self.cell_edges[self.cell_off[i]:self.cell_off[i + 1]]

    def cell_polygon(self, i: int) -> np.ndarray:
        return self.points[self.cell_vertex_ids(i)]

    def vertex_edge_ids(self, v: int) -> np.ndarray:
        return self.v2e_idx[self.v2e_off[v]:self.v2e_off[v + 1]]

    def vertex_cell_ids(self, v: int) -> np.ndarray:
        return self.v2c_idx[self.v2c_off[v]:self.v2c_off[v + 1]]

    def face_geometry(self, f: FaceRef) -> FaceGeometry:
        if f.dim == 0:
            return FaceGeometry(0, self.points[f.index][None, :])
        if f.dim == 1:
            return FaceGeometry(1, self.points[self.edges[f.index]])
        return FaceGeometry(2, self.cell_polygon(f.index))

    def steiner(self, dim: int) -> np.ndarray:
        return (self.points, self.edge_mid, self.cell_steiner)[dim]

    def trusted(self, dim: int) -> np.ndarray:
        return (self.trusted_vertex, self.trusted_edge, self.trusted_cell)[dim]

    def complete(self, f: FaceRef) -> bool:
        if f.dim == 0:
            return bool(self.complete_vertex[f.index])
        if f.dim == 1:
            return bool(self.complete_edge[f.index])
        return True

    def intrinsic_volume(self, dim: int, i: int) -> np.ndarray:
        """Array of V_i over all faces of dimension dim."""
        n = self.face_count(dim)
        if i == 0:
            return np.ones(n)
        if i == 1:
            if dim == 1:
                return self.edge_len
            if dim == 2:
                return 0.5 * self.cell_perimeter
            return np.zeros(n)
        if i == 2:
            return self.cell_area if dim == 2 else np.zeros(n)
        raise ValueError(f"bad i {i}")

    # -- stars ---------------------------------------------------------------

    def face_star(self, f: FaceRef, l: int) -> list[FaceRef]:
        """S_l(f): l-faces comparable to f (containing it or contained in it).

        Raises StarTruncatedError when the sampling boundary cuts the star.
        """
        k = f.dim
        if l == k:
            return [f]
        if not self.complete(f):
            raise StarTruncatedError(f"face {f} star truncated by boundary")
        if k == 0:
            ids = self.vertex_edge_ids(f.index) if l == 1 \
                else self.vertex_cell_ids(f.index)
        elif k == 1:
            if l == 0:
                ids = self.edges[f.index]
            else:
                ids = self.edge_cells[f.index]
                ids = ids[ids >= 0]
        else:
            ids = self.cell_vertex_ids(f.index) if l == 0 \
                else self.cell_edge_ids(f.index)
        return [FaceRef(l, int(i)) for i in ids]

    def star_size(self, f: FaceRef, n: int) -> int:
        return len(self.face_star(f, n))

    def face_star_shared(self, f: FaceRef, l: int, n: int, m: int) -> list[FaceRef]:
        """S_l^m(f): l-faces whose n-star shares exactly m n-faces with f's.

        Needs the full second-order neighbourhood of f; raises
        StarTruncatedError if the boundary cut reaches it.
        """
        if not bool(self.trusted(f.dim)[f.index]):
            raise StarTruncatedError(f"face {f} 2nd-order star truncated")
        a_ids = {(g.dim, g.index) for g in self.face_star(f, n)}
        cand: set[tuple[int, int]] = set()
        for (_, ai) in a_ids:
            for g in self.face_star(FaceRef(n, ai), l):
                cand.add((g.dim, g.index))
        out = []
        for (gd, gi) in sorted(cand):
            b_ids = {(h.dim, h.index)
                     for h in self.face_star(FaceRef(gd, gi), n)}
            if len(a_ids & b_ids) == m:
                out.append(FaceRef(gd, gi))
        return out

    # -- point location ------------------------------------------------------

    def face_of_point(self, x) -> FaceRef:
        """Face whose relative interior contains x; points within EPS of a
        lower-dimensional face resolve to it (lowest dimension, lowest index)."""
        x = np.asarray(x, dtype=np.float64)
        bb = self.cell_bbox
        cand = np.nonzero((bb[:, 0] <= x[0] + EPS) & (bb[:, 2] >= x[0] - EPS)
                          & (bb[:, 1] <= x[1] + EPS) & (bb[:, 3] >= x[1] - EPS))[0]
        verts = set()
        edges = set()
        inside = []
        for ci in cand:
            poly = self.cell_polygon(ci)
            if not point_in_convex(x, poly, eps=EPS * 10):
                continue
            verts.update(self.cell_vertex_ids(ci).tolist())
            edges.update(self.cell_edge_ids(ci).tolist())
            if point_in_convex(x, poly, eps=0.0):
                inside.append(ci)
        for v in sorted(verts):
            if np.hypot(*(self.points[v] - x)) <= EPS:
                return FaceRef(0, v)
        for e in sorted(edges):
            a, b = self.points[self.edges[e]]
            if point_segment_distance(x, a, b) <= EPS:
                return FaceRef(1, e)
        if inside:
            return FaceRef(2, min(inside))
        raise ValueError(f"point {x.tolist()} lies outside the tessellation")

    # -- statistics of trust -------------------------------------------------

    def untrusted_in_core(self) -> int:
        """Number of faces meeting the core region that are not 2nd-order
        trusted (should be zero when the padding did its job)."""
        poly = self.core_region.poly
        x0, y0 = poly.min(axis=0)
        x1, y1 = poly.max(axis=0)
        bad = 0
        pv = self.points
        vm = ((pv[:, 0] >= x0) & (pv[:, 0] <= x1)
              & (pv[:, 1] >= y0) & (pv[:, 1] <= y1))
        for v in np.nonzero(vm & ~self.trusted_vertex)[0]:
            if point_in_convex(pv[v], poly):
                bad += 1
        eb = self.edge_bbox
        em = ~((eb[:, 2] < x0) | (eb[:, 0] > x1)
               | (eb[:, 3] < y0) | (eb[:, 1] > y1))
        for e in np.nonzero(em & ~self.trusted_edge)[0]:
            a, b = pv[self.edges[e]]
            if segment_intersects_convex(a, b, poly):
                bad += 1
        cb = self.cell_bbox
        cm = ~((cb[:, 2] < x0) | (cb[:, 0] > x1)
               | (cb[:, 3] < y0) | (cb[:, 1] > y1))
        for c in np.nonzero(cm & ~self.trusted_cell)[0]:
            if convex_polygons_intersect(self.cell_polygon(c), poly):
                bad += 1
        return bad


def _csr(keys: np.ndarray, vals: np.ndarray, n: int):
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n)
    off = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return vals[order].astype(np.int64), off


# ---------------------------------------------------------------------------
# generators


def _sample_rect(cfg: GeneratorConfig, pad: float):
    poly = cfg.region.poly
    x0, y0 = poly.min(axis=0) - pad
    x1, y1 = poly.max(axis=0) + pad
    # align to the unit grid that carries the nested sampling streams
    return (float(np.floor(x0)), float(np.floor(y0)),
            float(np.ceil(x1)), float(np.ceil(y1)))


_GROWTH_FACTOR = 1.6
_GROWTH_TRIES = 6


def _certified(builder, cfg: GeneratorConfig) -> PlanarTessellation:
    """Grow the padding until no untrusted face meets the core region.

    The nested sampling streams make a larger region an extension of the
    same realization, so this is a stopping rule on one fixed sample, not
    a biased redraw.
    """
    pad = cfg.resolved_padding()
    for step in range(_GROWTH_TRIES):
        t = builder(cfg, pad)
        # A probe point guards against the core sitting entirely inside a
        # discarded clip-boundary face, which untrusted_in_core cannot see
        # (partial overlaps always expose an untrusted edge or vertex).
        try:
            t.face_of_point(t.core_region.poly.mean(axis=0))
            covered = True
        except ValueError:
            covered = False
        if covered and t.untrusted_in_core() == 0:
            t.generator["padding_used"] = pad
            t.generator["growth_steps"] = step
            return t
        pad *= _GROWTH_FACTOR
    raise PaddingError("core faces stayed untrusted after "
                       f"{_GROWTH_TRIES} padding growth steps")


def _nested_poisson_points(seed: int, x0, y0, x1, y1, intensity: float):
    """Poisson points on the grid-aligned rectangle, one counter-based
    stream per unit cell, extendable to any larger rectangle."""
    ii, jj = np.meshgrid(np.arange(int(x0), int(x1), dtype=np.int64),
                         np.arange(int(y0), int(y1), dtype=np.int64),
                         indexing="ij")
    seeds = grid_stream_seeds(seed, ii.ravel(), jj.ravel())
    counts = poisson_counts(stream_uniform(seeds), intensity)
    uv = stream_payload(seeds, 2 * counts).reshape(-1, 2)
    ox = np.repeat(ii.ravel(), counts)
    oy = np.repeat(jj.ravel(), counts)
    return np.column_stack([ox + uv[:, 0], oy + uv[:, 1]])


def _poisson_voronoi_once(cfg: GeneratorConfig, pad: float) -> PlanarTessellation:
    x0, y0, x1, y1 = _sample_rect(cfg, pad)
    pts = _nested_poisson_points(cfg.seed, x0, y0, x1, y1, cfg.intensity)
    n = len(pts)
    if n < 4:
        raise DegenerateSampleError(f"poisson sample too small (n={n})")
    vor = Voronoi(pts)

    cells = []
    gens = []
    for i in range(n):
        reg = vor.regions[vor.point_region[i]]
        if len(reg) < 3 or -1 in reg:
            continue
        vids = np.asarray(reg, dtype=np.int64)
        v = vor.vertices[vids]
        r = np.hypot(v[:, 0] - pts[i, 0], v[:, 1] - pts[i, 1])
        if (np.any(v[:, 0] - r < x0) or np.any(v[:, 0] + r > x1)
                or np.any(v[:, 1] - r < y0) or np.any(v[:, 1] + r > y1)):
            continue
        cells.append(vids)
        gens.append(pts[i])
    if not cells:
        raise DegenerateSampleError("no certified Voronoi cell; increase padding")
    meta = cfg.to_dict()
    return PlanarTessellation(vor.vertices, cells, cfg.region, meta,
                              generators_xy=np.asarray(gens))


def build_poisson_voronoi(cfg: GeneratorConfig) -> PlanarTessellation:
    """Voronoi tessellation of a Poisson sample on the padded region.

    A cell is kept only when its Voronoi flower (union of the circumballs
    centred at its vertices) lies inside the sampled rectangle; such a cell
    is provably the cell of the infinite process, so every kept cell is
    exact and boundary effects show up only as open vertex fans.  The
    padding grows adaptively until all faces meeting the core are trusted.
    """
    return _certified(_poisson_voronoi_once, cfg)


_LATTICE_UNITS = {
    # code -> (ux, uy) integer-key scale factors per unit edge length
    "4.4.4.4": (1.0, 1.0),
    "3.3.3.3.3.3": (0.5, np.sqrt(3) / 2),
    "6.6.6": (np.sqrt(3) / 2, 0.5),
    "3.6.3.6": (0.5, np.sqrt(3) / 2),
}

_LATTICE_BASIS = {
    # Bravais basis (columns) per unit edge length, for the random shift
    "4.4.4.4": np.array([[1.0, 0.0], [0.0, 1.0]]),
    "3.3.3.3.3.3": np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]]),
    "6.6.6": np.array([[np.sqrt(3), np.sqrt(3) / 2], [0.0, 1.5]]),
    "3.6.3.6": np.array([[2.0, 1.0], [0.0, np.sqrt(3)]]),
}


def _lattice_cells(code: str, i: int, j: int):
    """Integer-key vertex rings of the cells attached to Bravais point (i, j)."""
    if code == "4.4.4.4":
        return [[(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]]
    if code == "3.3.3.3.3.3":
        m = 2 * i + j
        up = [(m, j), (m + 2, j), (m + 1, j + 1)]
        down = [(m + 2, j), (m + 3, j + 1), (m + 1, j + 1)]
        return [up, down]
    if code == "6.6.6":
        m0, n0 = 2 * i + j, 3 * j
        return [[(m0 + 1, n0 + 1), (m0, n0 + 2), (m0 - 1, n0 + 1),
                 (m0 - 1, n0 - 1), (m0, n0 - 2), (m0 + 1, n0 - 1)]]
    if code == "3.6.3.6":
        m0, n0 = 4 * i + 2 * j, 2 * j
        up = [(m0, n0), (m0 + 2, n0), (m0 + 1, n0 + 1)]
        down = [(m0 + 1, n0 + 1), (m0 + 2, n0 + 2), (m0, n0 + 2)]
        hexa = [(m0 + 4, n0), (m0 + 5, n0 + 1), (m0 + 4, n0 + 2),
                (m0 + 2, n0 + 2), (m0 + 1, n0 + 1), (m0 + 2, n0)]
        return [up, down, hexa]
    raise ValueError(f"unknown lattice code {code!r}")


def build_archimedean(cfg: GeneratorConfig) -> PlanarTessellation:
    """One of the four supported Archimedean lattices, uniformly shifted.

    Vertices are identified by exact integer keys, so shared vertices
    coincide bit for bit across cells.
    """
    code = cfg.lattice_code
    if code not in ARCHIMEDEAN_CODES:
        raise ValueError(f"lattice_code must be one of {ARCHIMEDEAN_CODES}")
    a = cfg.edge_length
    rng = np.random.default_rng(cfg.seed)
    basis = _LATTICE_BASIS[code] * a
    shift = basis @ rng.uniform(0.0, 1.0, 2)
    ux, uy = _LATTICE_UNITS[code]
    ux *= a
    uy *= a

    x0, y0, x1, y1 = _sample_rect(cfg, cfg.resolved_padding())
    # conservative Bravais index ranges
    binv = np.linalg.inv(basis)
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]]) - shift
    ij = corners @ binv.T
    i_lo, j_lo = np.floor(ij.min(axis=0)).astype(int) - 3
    i_hi, j_hi = np.ceil(ij.max(axis=0)).astype(int) + 3

    key_to_id: dict[tuple[int, int], int] = {}
    keys: list[tuple[int, int]] = []
    cells = []
    margin = 3.0 * a
    for i in range(i_lo, i_hi + 1):
        for j in range(j_lo, j_hi + 1):
            cx, cy = basis @ (i, j) + shift
            if not (x0 - margin <= cx <= x1 + margin
                    and y0 - margin <= cy <= y1 + margin):
                continue
            for ring in _lattice_cells(code, i, j):
                ids = []
                for kk in ring:
                    vid = key_to_id.get(kk)
                    if vid is None:
                        vid = len(keys)
                        key_to_id[kk] = vid
                        keys.append(kk)
                    ids.append(vid)
                cells.append(np.asarray(ids, dtype=np.int64))
    if not cells:
        raise DegenerateSampleError("lattice range produced no cells")
    karr = np.asarray(keys, dtype=np.float64)
    points = np.column_stack([karr[:, 0] * ux, karr[:, 1] * uy]) + shift
    return PlanarTessellation(points, cells, cfg.region, cfg.to_dict())


def _nested_poisson_lines(seed: int, rmax: int):
    """Isotropic lines with signed distance in [-rmax, rmax), one stream
    per unit distance interval, extendable to any larger rmax."""
    jj = np.arange(-rmax, rmax, dtype=np.int64)
    seeds = grid_stream_seeds(seed, jj)
    counts = poisson_counts(stream_uniform(seeds), 1.0)
    uv = stream_payload(seeds, 2 * counts).reshape(-1, 2)
    rr = np.repeat(jj, counts) + uv[:, 0]
    theta = np.pi * uv[:, 1]
    return theta, rr


def build_poisson_line(cfg: GeneratorConfig) -> PlanarTessellation:
    """Isotropic Poisson line tessellation.

    Lines are sampled in (angle, signed distance) form, clipped to the
    padded rectangle, and the arrangement's bounded faces are traced from
    the half-edge structure.  Faces touching the clip rectangle are
    discarded (they are clipping artifacts, not cells); interior faces are
    exact because every line meeting the rectangle was sampled.  The
    padding grows adaptively until all faces meeting the core are trusted,
    which matters here because line cells can be very elongated.
    """
    return _certified(_poisson_line_once, cfg)


def _poisson_line_once(cfg: GeneratorConfig, pad: float) -> PlanarTessellation:
    x0, y0, x1, y1 = _sample_rect(cfg, pad)
    rect = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    rmax = int(np.ceil(np.max(np.hypot(rect[:, 0], rect[:, 1]))))
    # unit-rate distance intervals scaled by the line intensity: thinning
    # by distance keeps the streams nested, so scale the axis instead
    theta, rr = _nested_poisson_lines(cfg.seed, int(np.ceil(rmax * cfg.intensity)))
    rr = rr / cfg.intensity
    keep_r = np.abs(rr) <= rmax
    theta, rr = theta[keep_r], rr[keep_r]
    n = len(rr)
    if n < 3:
        raise DegenerateSampleError(f"too few lines (n={n})")
    nx, ny = np.cos(theta), np.sin(theta)
    dirs = np.column_stack([-ny, nx])
    base = np.column_stack([rr * nx, rr * ny])

    # clip each line to the rectangle: parameter interval [lo, hi]
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    for axis, (b0, b1) in ((0, (x0, x1)), (1, (y0, y1))):
        d = dirs[:, axis]
        p = base[:, axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            t0 = (b0 - p) / d
            t1 = (b1 - p) / d
        tlo = np.where(d > 0, t0, t1)
        thi = np.where(d > 0, t1, t0)
        par = np.abs(d) < 1e-14
        inside = (p >= b0) & (p <= b1)
        tlo = np.where(par, np.where(inside, -np.inf, np.inf), tlo)
        thi = np.where(par, np.where(inside, np.inf, -np.inf), thi)
        lo = np.maximum(lo, tlo)
        hi = np.minimum(hi, thi)
    keep = lo < hi
    idx = np.nonzero(keep)[0]
    if len(idx) < 2:
        raise DegenerateSampleError("fewer than two lines meet the region")
    base, dirs, lo, hi = base[idx], dirs[idx], lo[idx], hi[idx]
    nl = len(idx)

    # pairwise intersections
    ii, jj = np.triu_indices(nl, k=1)
    di, dj = dirs[ii], dirs[jj]
    den = di[:, 0] * dj[:, 1] - di[:, 1] * dj[:, 0]
    dp = base[jj] - base[ii]
    with np.errstate(divide="ignore", invalid="ignore"):
        ti = (dp[:, 0] * dj[:, 1] - dp[:, 1] * dj[:, 0]) / den
        tj = (dp[:, 0] * di[:, 1] - dp[:, 1] * di[:, 0]) / den
    ok = (np.abs(den) > 1e-12) \
        & (ti > lo[ii] + EPS) & (ti < hi[ii] - EPS) \
        & (tj > lo[jj] + EPS) & (tj < hi[jj] - EPS)
    ii, jj, ti, tj = ii[ok], jj[ok], ti[ok], tj[ok]

    pts = [base[ii] + ti[:, None] * di[ok]]
    n_int = len(ii)
    # boundary nodes: the two clip endpoints of each line, then corners
    endpts = np.concatenate([base + lo[:, None] * dirs,
                             base + hi[:, None] * dirs])
    pts.append(endpts)
    pts.append(rect)
    points = np.concatenate(pts)
    boundary_node = np.zeros(len(points), dtype=bool)
    boundary_node[n_int:] = True

    # edges along each line
    edge_list = []
    params = [[] for _ in range(nl)]
    nodes = [[] for _ in range(nl)]
    for k in range(n_int):
        params[ii[k]].append(ti[k])
        nodes[ii[k]].append(k)
        params[jj[k]].append(tj[k])
        nodes[jj[k]].append(k)
    for li in range(nl):
        ts = np.asarray([lo[li]] + params[li] + [hi[li]])
        ns = np.asarray([n_int + li] + nodes[li] + [n_int + nl + li],
                        dtype=np.int64)
        order = np.argsort(ts)
        ns = ns[order]
        for u, v in zip(ns[:-1], ns[1:]):
            edge_list.append((int(u), int(v)))
    # rectangle boundary edges between consecutive boundary nodes
    bidx = np.nonzero(boundary_node)[0]
    bpts = points[bidx]
    per = _rect_perimeter_param(bpts, x0, y0, x1, y1)
    order = np.argsort(per)
    ring = bidx[order]
    for u, v in zip(ring, np.roll(ring, -1)):
        if u != v:
            edge_list.append((int(u), int(v)))

    faces = _trace_faces(points, np.asarray(edge_list, dtype=np.int64))
    cells = []
    for ring_ids in faces:
        if np.any(boundary_node[ring_ids]):
            continue
        cells.append(ring_ids)
    if not cells:
        raise DegenerateSampleError("no interior line-tessellation cell; "
                                    "increase region or intensity")
    return PlanarTessellation(points, cells, cfg.region, cfg.to_dict())


def _rect_perimeter_param(p: np.ndarray, x0, y0, x1, y1) -> np.ndarray:
    """Monotone parameter along the rectangle boundary (CCW from (x0,y0))."""
    w, h = x1 - x0, y1 - y0
    t = np.empty(len(p))
    onb = np.abs(p[:, 1] - y0) < 1e-7
    ont = np.abs(p[:, 1] - y1) < 1e-7
    onr = np.abs(p[:, 0] - x1) < 1e-7
    onl = np.abs(p[:, 0] - x0) < 1e-7
    t[onb] = p[onb, 0] - x0
    t[onr] = w + (p[onr, 1] - y0)
    t[ont] = w + h + (x1 - p[ont, 0])
    t[onl & ~onb] = 2 * w + h + (y1 - p[onl & ~onb, 1])
    t[onb & onl] = 0.0
    return t


def _trace_faces(points: np.ndarray, edges: np.ndarray) -> list[np.ndarray]:
    """Extract bounded CCW faces of a planar straight-line graph.

    Half-edge walk: the successor of u->v is the outgoing edge at v that is
    the clockwise neighbour of v->u in the angular order; the unbounded
    face comes out clockwise and is dropped.
    """
    ne = len(edges)
    he_from = np.concatenate([edges[:, 0], edges[:, 1]])
    he_to = np.concatenate([edges[:, 1], edges[:, 0]])
    twin = np.concatenate([np.arange(ne) + ne, np.arange(ne)])
    d = points[he_to] - points[he_from]
    ang = np.arctan2(d[:, 1], d[:, 0])
    nv = len(points)
    order = np.lexsort((ang, he_from))
    run_off = np.concatenate([[0], np.cumsum(np.bincount(he_from,
                                                         minlength=nv))])
    pos = np.empty(2 * ne, dtype=np.int64)
    pos[order] = np.arange(2 * ne) - run_off[he_from[order]]
    deg = run_off[1:] - run_off[:-1]

    nxt = np.empty(2 * ne, dtype=np.int64)
    rev = twin
    v_of = he_from[rev]
    nxt_pos = (pos[rev] - 1) % np.maximum(deg[v_of], 1)
    nxt = order[run_off[v_of] + nxt_pos]

    visited = np.zeros(2 * ne, dtype=bool)
    faces = []
    for h0 in range(2 * ne):
        if visited[h0]:
            continue
        ring = []
        h = h0
        while not visited[h]:
            visited[h] = True
            ring.append(he_from[h])
            h = nxt[h]
        ring = np.asarray(ring, dtype=np.int64)
        if len(ring) >= 3:
            x, y = points[ring, 0], points[ring, 1]
            area2 = np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))
            if area2 > 0:
                faces.append(ring)
    return faces


def build(cfg: GeneratorConfig) -> PlanarTessellation:
    if cfg.model == "voronoi":
        return build_poisson_voronoi(cfg)
    if cfg.model == "lattice":
        return build_archimedean(cfg)
    if cfg.model == "line":
        return build_poisson_line(cfg)
    raise ValueError(f"unknown model {cfg.model!r}")


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    face_to_face_ok: bool
    overlap_violations: int
    convex_ok: bool
    normal: bool
    degree_histogram: dict
    euler_checked: bool
    euler_ok: bool
    euler_detail: dict = field(default_factory=dict)
    untrusted_core_faces: int = 0
    messages: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (self.face_to_face_ok and self.convex_ok
                and (self.euler_ok or not self.euler_checked)
                and self.untrusted_core_faces == 0)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "face_to_face_ok": self.face_to_face_ok,
            "overlap_violations": self.overlap_violations,
            "convex_ok": self.convex_ok,
            "normal": self.normal,
            "degree_histogram": {str(k): v for k, v
                                 in sorted(self.degree_histogram.items())},
            "euler_checked": self.euler_checked,
            "euler_ok": self.euler_ok,
            "euler_detail": self.euler_detail,
            "untrusted_core_faces": self.untrusted_core_faces,
            "messages": self.messages,
        }


def validate(t: PlanarTessellation, window: Optional[Window] = None) -> ValidationReport:
    """Structural checks: pairwise cell overlaps, convexity, vertex degrees,
    normality, and (for normal tessellations) the planar Euler identities on
    the faces meeting a window inside the trusted core."""
    msgs = []
    convex_ok = bool(np.all(t._convexity_margin() > 0))
    if not convex_ok:
        msgs.append("non-convex cell found")

    # overlap check on bbox-close cell pairs via a coarse grid
    violations = 0
    nc = t.n_cells
    cs = max(np.median(np.sqrt(np.maximum(t.cell_area, 1e-12))), 1e-6)
    gx = np.floor(t.cell_bbox[:, 0] / cs).astype(np.int64)
    gy = np.floor(t.cell_bbox[:, 1] / cs).astype(np.int64)
    buckets: dict[tuple[int, int], list[int]] = {}
    for i in range(nc):
        x0g = gx[i]
        y0g = gy[i]
        x1g = int(np.floor(t.cell_bbox[i, 2] / cs))
        y1g = int(np.floor(t.cell_bbox[i, 3] / cs))
        for bx in range(x0g, x1g + 1):
            for by in range(y0g, y1g + 1):
                buckets.setdefault((bx, by), []).append(i)
    seen = set()
    for ids in buckets.values():
        for ai in range(len(ids)):
            for bi in range(ai + 1, len(ids)):
                a, b = ids[ai], ids[bi]
                if (a, b) in seen:
                    continue
                seen.add((a, b))
                if (t.cell_bbox[a, 2] < t.cell_bbox[b, 0]
                        or t.cell_bbox[b, 2] < t.cell_bbox[a, 0]
                        or t.cell_bbox[a, 3] < t.cell_bbox[b, 1]
                        or t.cell_bbox[b, 3] < t.cell_bbox[a, 1]):
                    continue
                inter = clip_polygon(t.cell_polygon(a), t.cell_polygon(b))
                if inter is not None and polygon_area(inter) > EPS:
                    violations += 1
    if violations:
        msgs.append(f"{violations} overlapping cell pairs")

    interior = t.complete_vertex
    deg = t.vertex_edge_degree[interior]
    hist = {int(k): int(v) for k, v in
            zip(*np.unique(deg, return_counts=True))} if len(deg) else {}
    normal = bool(len(deg)) and bool(np.all(deg == 3))

    euler_checked = False
    euler_ok = True
    detail = {}
    if window is None:
        window = t.core_region
    if normal:
        euler_checked = True
        poly = window.poly
        n0 = int(sum(point_in_convex(t.points[v], poly)
                     for v in range(t.n_vertices)))
        n1 = 0
        eps_count = 0
        for e in range(t.n_edges):
            a, b = t.points[t.edges[e]]
            res = clip_segment(a, b, poly)
            if res is not None:
                n1 += 1
                eps_count += res[2]
        n2 = int(sum(convex_polygons_intersect(t.cell_polygon(c), poly)
                     for c in range(t.n_cells)))
        detail = {"n0": n0, "n1": n1, "n2": n2, "crossings": eps_count}
        euler_ok = (n0 == 2 * n2 - eps_count - 2) \
            and (n1 == 3 * n2 - eps_count - 3)
        if not euler_ok:
            msgs.append(f"Euler identities failed: {detail}")

    untrusted = t.untrusted_in_core()
    if untrusted:
        msgs.append(f"{untrusted} untrusted faces meet the core region")

    return ValidationReport(
        face_to_face_ok=violations == 0,
        overlap_violations=violations,
        convex_ok=convex_ok,
        normal=normal,
        degree_histogram=hist,
        euler_checked=euler_checked,
        euler_ok=euler_ok,
        euler_detail=detail,
        untrusted_core_faces=untrusted,
        messages=msgs,
    )


# ---------------------------------------------------------------------------
# serialization


FORMAT_TAG = "tessperc-tessellation/1"


def tessellation_to_dict(t: PlanarTessellation) -> dict:
    return {
        "format": FORMAT_TAG,
        "points": t.points.tolist(),
        "edges": t.edges.tolist(),
        "cells": [t.cell_vertex_ids(i).tolist() for i in range(t.n_cells)],
        "core_region": {
            "polygon": t.core_region.polygon.tolist(),
            "scale_t": t.core_region.scale_t,
            "offset": t.core_region.offset.tolist(),
        },
        "generator": t.generator,
        "generators_xy": (t.generators_xy.tolist()
                          if t.generators_xy is not None else None),
    }


def tessellation_from_dict(doc: dict) -> PlanarTessellation:
    if doc.get("format") != FORMAT_TAG:
        raise ValueError("not a tessellation document")
    reg = doc["core_region"]
    window = Window(np.asarray(reg["polygon"]), reg["scale_t"],
                    np.asarray(reg.get("offset", [0.0, 0.0])))
    return PlanarTessellation(
        np.asarray(doc["points"], dtype=np.float64),
        [np.asarray(c, dtype=np.int64) for c in doc["cells"]],
        window,
        doc.get("generator") or {},
        edge_order=np.asarray(doc["edges"], dtype=np.int64),
        generators_xy=(np.asarray(doc["generators_xy"])
                       if doc.get("generators_xy") else None),
    )


def save_tessellation(t: PlanarTessellation, path, coloring=None):
    doc = tessellation_to_dict(t)
    if coloring is not None:
        doc["coloring"] = coloring.to_dict()
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_tessellation(path):
    with open(path) as fh:
        doc = json.load(fh)
    t = tessellation_from_dict(doc)
    return t, doc.get("coloring")
