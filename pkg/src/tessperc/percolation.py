"""Face coloring for n-percolation on a planar tessellation.

Faces of the chosen dimension n are colored black independently with
probability p.  Colors propagate to the other dimensions by fixed rules:
a face of dimension below n is black when it belongs to the boundary of
some black n-face, and a face of dimension above n is black when all of
its facets are black.  The black phase Z is the union of all black faces,
a random closed set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import face_uniforms
from .tessellation import PlanarTessellation


@dataclass(frozen=True)
class Coloring:
    mode_n: int
    p: float
    seed: int
    black: tuple  # three bool arrays, indexed by face dimension

    def black_indices(self, dim: int) -> np.ndarray:
        return np.nonzero(self.black[dim])[0]

    def to_dict(self) -> dict:
        return {
            "mode_n": self.mode_n,
            "p": self.p,
            "seed": self.seed,
            "black": [b.astype(np.uint8).tolist() for b in self.black],
        }

    @staticmethod
    def from_dict(doc: dict) -> "Coloring":
        black = tuple(np.asarray(b, dtype=np.uint8).astype(bool)
                      for b in doc["black"])
        return Coloring(int(doc["mode_n"]), float(doc["p"]),
                        int(doc["seed"]), black)


def derive_colors(t: PlanarTessellation, n: int, black_n: np.ndarray) -> tuple:
    """Propagate black n-face indicators to all three dimensions."""
    black = [None, None, None]
    black[n] = np.asarray(black_n, dtype=bool)
    if n == 2:
        bc = black[2]
        e = t.edge_cells
        be = bc[e[:, 0]] | ((e[:, 1] >= 0) & bc[np.maximum(e[:, 1], 0)])
        black[1] = be
        black[0] = np.logical_or.reduceat(bc[t.v2c_idx], t.v2c_off[:-1])
    elif n == 1:
        be = black[1]
        black[0] = np.logical_or.reduceat(be[t.v2e_idx], t.v2e_off[:-1])
        black[2] = np.logical_and.reduceat(be[t.cell_edges], t.cell_off[:-1])
    else:
        bv = black[0]
        be = bv[t.edges[:, 0]] & bv[t.edges[:, 1]]
        black[1] = be
        black[2] = np.logical_and.reduceat(be[t.cell_edges], t.cell_off[:-1])
    return tuple(black)


def color(t: PlanarTessellation, n: int, p: float, seed: int) -> Coloring:
    """Color the tessellation in mode n with black probability p.

    The underlying uniforms are a pure function of (seed, dimension, face
    index), so colorings at different p with the same seed are coupled
    monotonically: raising p only adds black faces.
    """
    if n not in (0, 1, 2):
        raise ValueError("mode n must be 0, 1 or 2")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    u = face_uniforms(seed, n, t.face_count(n))
    return Coloring(n, float(p), int(seed), derive_colors(t, n, u < p))


def recolor(t: PlanarTessellation, c: Coloring, p: float) -> Coloring:
    """Same seed and mode at a different p (monotone coupling)."""
    u = face_uniforms(c.seed, c.mode_n, t.face_count(c.mode_n))
    return Coloring(c.mode_n, float(p), c.seed,
                    derive_colors(t, c.mode_n, u < p))


def complement_coloring(t: PlanarTessellation, c: Coloring) -> Coloring:
    """Flip the generating n-face colors and re-derive the rest.

    The result is distributed like a mode-n coloring with probability
    1 - p.  In cell mode its black phase is additionally the closure of
    the complement of the original black phase, which is the basis of the
    per-sample complementation identity.
    """
    return Coloring(c.mode_n, 1.0 - c.p, c.seed,
                    derive_colors(t, c.mode_n, ~c.black[c.mode_n]))


def coloring_consistent(t: PlanarTessellation, c: Coloring) -> bool:
    """Re-derive colors from the n-face indicators and compare."""
    derived = derive_colors(t, c.mode_n, c.black[c.mode_n])
    return all(np.array_equal(a, b) for a, b in zip(derived, c.black))
