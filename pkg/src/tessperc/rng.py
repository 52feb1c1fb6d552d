"""Counter-based random number helpers.

Colouring decisions must not depend on iteration order, thread count or
anything else besides (seed, face dimension, face index).  We therefore
derive one uniform per face from a stateless 64-bit mixer (splitmix64)
instead of drawing from a sequential stream.
"""

from __future__ import annotations

import numpy as np

# splitmix64 constants
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)

# per-dimension salts so vertex/edge/cell streams never collide
_DIM_SALT = (
    np.uint64(0xD1B54A32D192ED03),
    np.uint64(0xABC98388FB8FAC03),
    np.uint64(0x8CB92BA72F3D8DD7),
)


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorized over uint64 arrays."""
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= _M1
    x ^= x >> np.uint64(27)
    x *= _M2
    x ^= x >> np.uint64(31)
    return x


def face_uniforms(seed: int, dim: int, count: int) -> np.ndarray:
    """Uniform(0,1) variate for each face index 0..count-1 of dimension dim.

    Pure function of (seed, dim, index); safe to evaluate in any order.
    """
    if not 0 <= dim <= 2:
        raise ValueError(f"dim must be 0, 1 or 2, got {dim}")
    idx = np.arange(count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _DIM_SALT[dim])
        bits = _mix64(base + (idx + np.uint64(1)) * _GOLDEN)
    # 53 high bits -> double in [0, 1)
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def child_seed(master: int, index: int) -> int:
    """Derived seed for replicate `index`; stable, order-independent."""
    with np.errstate(over="ignore"):
        x = _mix64(
            np.asarray(
                [np.uint64(master & 0xFFFFFFFFFFFFFFFF)
                 + (np.uint64(index) + np.uint64(1)) * _GOLDEN],
                dtype=np.uint64,
            )
        )
    return int(x[0])


# ---------------------------------------------------------------------------
# nested sampling streams
#
# Poisson samples must be extendable: enlarging the sampled region has to
# add material without redrawing what was already there, so that adaptive
# padding is a stopping rule on one fixed realization.  Each unit grid
# cell (or unit interval) therefore owns an independent counter-based
# stream keyed by its integer coordinates.

_GRID_SALT = np.uint64(0x5851F42D4C957F2D)


def _zigzag(ix: np.ndarray) -> np.ndarray:
    ix = np.asarray(ix, dtype=np.int64)
    return ((ix << 1) ^ (ix >> 63)).astype(np.uint64)


def grid_stream_seeds(seed: int, ix, iy=None) -> np.ndarray:
    """Stream seed per integer grid cell (or per interval if iy is None)."""
    with np.errstate(over="ignore"):
        base = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _GRID_SALT
        s = _mix64(base + _zigzag(ix) * _GOLDEN)
        if iy is not None:
            s = _mix64(s + _zigzag(iy) * _M1)
    return s


def stream_uniform(stream_seeds: np.ndarray) -> np.ndarray:
    """The first uniform of each stream (used for the Poisson count)."""
    with np.errstate(over="ignore"):
        bits = _mix64(stream_seeds + _GOLDEN)
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def stream_payload(stream_seeds: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """counts[i] further uniforms from stream i, concatenated."""
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        return np.empty(0)
    rep = np.repeat(stream_seeds, counts)
    off = np.repeat(np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    k = np.arange(total, dtype=np.uint64) - off.astype(np.uint64)
    with np.errstate(over="ignore"):
        bits = _mix64(rep + (k + np.uint64(2)) * _GOLDEN)
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def poisson_counts(u: np.ndarray, mean: float) -> np.ndarray:
    """Poisson quantile transform of uniforms, safe at the endpoints."""
    from scipy.stats import poisson

    u = np.clip(u, 2.0 ** -53, 1.0 - 2.0 ** -53)
    return poisson.ppf(u, mean).astype(np.int64)
