"""Closed-form mean values and asymptotic covariances for face percolation.

The black probability of a single face is an explicit polynomial in p
determined by the size of its star of generating faces; joint blackness of
two faces depends in addition on how many generating faces the two stars
share.  Mean densities are finite signed sums of these polynomials against
Palm star-size tables.  Asymptotic covariances combine a coloring part
(pair sums against centered joint polynomials) with a tessellation part
(covariances of the uncolored face sums), and for cell percolation on a
normal tessellation everything collapses to six explicit displays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly


# ---------------------------------------------------------------------------
# blackness polynomials


def f_poly(n: int, k: int, r: int, p: float) -> float:
    """Probability that a k-face with r generating n-faces in its star is
    black: union rule below dimension n, intersection rule at and above."""
    if r < 1:
        raise ValueError("star size r must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if k < n:
        return 1.0 - (1.0 - p) ** r
    return p ** r


def g_poly(n: int, m: int, k: int, l: int, r: int, s: int, p: float) -> float:
    """Joint probability that a k-face (r generating faces) and an l-face
    (s generating faces) sharing m generating faces are both black."""
    if not (0 <= m <= min(r, s)):
        raise ValueError("need 0 <= m <= min(r, s)")
    if min(r, s) < 1:
        raise ValueError("star sizes must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    q = 1.0 - p
    if k < n and l < n:
        return 1.0 - q ** r - q ** s + q ** (r + s - m)
    if k >= n and l >= n:
        return p ** (r + s - m)
    if k < n <= l:
        return p ** s if m >= 1 else p ** s * (1.0 - q ** r)
    # l < n <= k
    return p ** r if m >= 1 else p ** r * (1.0 - q ** s)


# ---------------------------------------------------------------------------
# mean value formulas


@dataclass
class DensityInput:
    """Palm star-size tables for one functional V_i in mode n.

    masses[(k, r)] holds the intensity-weighted Palm mass
    gamma_k E_k[V_i(F); |S_n(F)| = r]; tails[k] holds any mass beyond the
    tabulated star sizes, used only for an error bound.
    """

    n: int
    i: int
    masses: dict
    tails: dict = field(default_factory=dict)


def density_formula_general(inp: DensityInput, p: float):
    """Mean V_i density of the black phase and a bound for the tail error."""
    total = 0.0
    for (k, r), mass in inp.masses.items():
        total += (-1.0) ** (inp.i + k) * mass * f_poly(inp.n, k, r, p)
    err = sum(abs(t) for t in inp.tails.values())
    return total, err


def density_cell_normal(i: int, p: float, gamma2: float,
                        e2_v1: float = None) -> float:
    """Mean V_i density for cell percolation on a normal tessellation.

    Only gamma2 enters V_0 and V_2; V_1 additionally needs the mean cell
    half-perimeter E_2[V_1].
    """
    q = 1.0 - p
    if i == 0:
        # 2*gamma2*(1-q^3) - 3*gamma2*(1-q^2) + gamma2*p, simplified
        return gamma2 * p * (1.0 - p) * (1.0 - 2.0 * p)
    if i == 1:
        if e2_v1 is None:
            raise ValueError("V_1 density needs E_2[V_1]")
        # gamma1*E1[V1]*(1-q^2) - gamma2*E2[V1]*p with gamma1 E1[V1]
        # equal to gamma2 E2[V1]
        return gamma2 * e2_v1 * ((1.0 - q * q) - p)
    if i == 2:
        return p
    raise ValueError("i must be 0, 1 or 2")


def planar_mean_euler(n: int, p: float, gammas, pkn: dict) -> float:
    """Mean Euler characteristic density for mode-n percolation on a planar
    tessellation with face intensities gammas=(g0,g1,g2) and star-size
    distributions pkn[(k, r)] = P(|S_n of a typical k-face| = r)."""
    total = 0.0
    for (k, r), prob in pkn.items():
        total += (-1.0) ** k * gammas[k] * prob * f_poly(n, k, r, p)
    return total


_ARCH_GAMMAS = {
    # per unit area for edge length 1: (gamma0, gamma1, gamma2)
    "4.4.4.4": (1.0, 2.0, 1.0),
    "3.3.3.3.3.3": (2 / np.sqrt(3), 6 / np.sqrt(3), 4 / np.sqrt(3)),
    "6.6.6": (4 / (3 * np.sqrt(3)), 2 / np.sqrt(3), 2 / (3 * np.sqrt(3))),
    "3.6.3.6": (np.sqrt(3) / 2, np.sqrt(3), np.sqrt(3) / 2),
}

_ARCH_STARS = {
    # per lattice: vertex edge-degree, vertex cell-degree,
    # list of (fraction, cell size) over cell types
    "4.4.4.4": (4, 4, [(1.0, 4)]),
    "3.3.3.3.3.3": (6, 6, [(1.0, 3)]),
    "6.6.6": (3, 3, [(1.0, 6)]),
    "3.6.3.6": (4, 4, [(2 / 3, 3), (1 / 3, 6)]),
}


def archimedean_gammas(code: str, a: float = 1.0):
    g = _ARCH_GAMMAS[code]
    return tuple(x / (a * a) for x in g)


def archimedean_star_table(code: str, n: int) -> dict:
    """pkn table for one of the supported lattices in mode n."""
    vdeg, vcells, cells = _ARCH_STARS[code]
    pkn: dict = {}
    if n == 0:
        pkn[(0, 1)] = 1.0
        pkn[(1, 2)] = 1.0
        for frac, size in cells:
            pkn[(2, size)] = pkn.get((2, size), 0.0) + frac
    elif n == 1:
        pkn[(0, vdeg)] = 1.0
        pkn[(1, 1)] = 1.0
        for frac, size in cells:
            pkn[(2, size)] = pkn.get((2, size), 0.0) + frac
    else:
        pkn[(0, vcells)] = 1.0
        pkn[(1, 2)] = 1.0
        pkn[(2, 1)] = 1.0
    return pkn


def archimedean_mean_euler(code: str, n: int, p: float, a: float = 1.0) -> float:
    return planar_mean_euler(n, p, archimedean_gammas(code, a),
                             archimedean_star_table(code, n))


_CELL_AREA_BY_SIZE = {3: np.sqrt(3) / 4, 4: 1.0, 6: 3 * np.sqrt(3) / 2}


def archimedean_density_input(code: str, n: int, i: int,
                              a: float = 1.0) -> DensityInput:
    """Exact star-size mass tables for a lattice: every Palm quantity is
    deterministic up to the cell-type mix."""
    gammas = archimedean_gammas(code, a)
    pkn = archimedean_star_table(code, n)
    _, _, cells = _ARCH_STARS[code]
    masses: dict = {}
    for (k, r), prob in pkn.items():
        if k == 2 or i > k:
            continue
        v = 1.0 if i == 0 else a
        masses[(k, r)] = gammas[k] * prob * v
    for frac, size in cells:
        if i == 0:
            v = 1.0
        elif i == 1:
            v = size * a / 2.0
        else:
            v = _CELL_AREA_BY_SIZE[size] * a * a
        r = 1 if n == 2 else size
        key = (2, r)
        masses[key] = masses.get(key, 0.0) + gammas[2] * frac * v
    return DensityInput(n, i, masses)


def poisson_voronoi_density_input(gamma: float, i: int) -> DensityInput:
    """Exact cell-mode tables for a Poisson-Voronoi tessellation, using the
    classical mean values (edge length density 2*sqrt(gamma))."""
    la = 2.0 * np.sqrt(gamma)
    if i == 0:
        masses = {(0, 3): 2.0 * gamma, (1, 2): 3.0 * gamma, (2, 1): gamma}
    elif i == 1:
        masses = {(1, 2): la, (2, 1): la}
    else:
        masses = {(2, 1): 1.0}
    return DensityInput(2, i, masses)


def poisson_line_gammas(lam: float):
    """Face intensities of an isotropic Poisson line tessellation with
    length density lam: crossings have intensity lam^2/pi."""
    g0 = lam * lam / np.pi
    return (g0, 2.0 * g0, g0)


def poisson_line_density_input(lam: float, i: int) -> DensityInput:
    """Exact cell-mode tables for an isotropic Poisson line tessellation:
    vertices have four cells, edges two, and the length density is lam."""
    g0, g1, g2 = poisson_line_gammas(lam)
    if i == 0:
        masses = {(0, 4): g0, (1, 2): g1, (2, 1): g2}
    elif i == 1:
        masses = {(1, 2): lam, (2, 1): lam}
    else:
        masses = {(2, 1): 1.0}
    return DensityInput(2, i, masses)


def poisson_line_mean_euler(p: float, gamma2: float) -> float:
    """Euler density for cell percolation on an isotropic Poisson line
    tessellation (vertices of degree four)."""
    return gamma2 * p * (1.0 - p) * (p * p - 3.0 * p + 1.0)


def intensity_relations(gamma2: float, n01: float) -> dict:
    """Face intensities of a planar face-to-face tessellation from the cell
    intensity and the mean vertex edge-degree n01."""
    if n01 <= 2:
        raise ValueError("mean vertex degree must exceed 2")
    gamma0 = 2.0 * gamma2 / (n01 - 2.0)
    gamma1 = n01 * gamma2 / (n01 - 2.0)
    n20 = 2.0 * n01 / (n01 - 2.0)
    return {"gamma0": gamma0, "gamma1": gamma1, "gamma2": gamma2,
            "n01": n01, "n20": n20}


# ---------------------------------------------------------------------------
# covariances for cell percolation on normal tessellations


@dataclass
class CellNormalIngredients:
    """Palm ingredients entering the covariance displays for cell
    percolation on a normal planar tessellation.

    mu2 is E_2[f0^2] with f0 the vertex count of the typical cell; the
    tau values are the asymptotic covariance rates of the uncolored face
    sums (cell count, total edge length) per unit area.
    """

    gamma2: float
    mu2: float
    e2_v2sq: float     # E_2[V_2^2]
    e2_v2v1: float     # E_2[V_2 V_1]
    e2_v2f0: float     # E_2[V_2 f0]
    e2_v1sq: float     # E_2[V_1^2]
    e1_v1sq: float     # E_1[V_1^2]
    e2_v1: float       # E_2[V_1]
    e2_v1f0: float     # E_2[V_1 f0]
    tau00: float
    tau10: float
    tau11: float


def covariance_planar_structure(p: float, ing: CellNormalIngredients) -> dict:
    """The six asymptotic covariance displays sigma_{ij}(p)."""
    g2 = ing.gamma2
    q = 1.0 - p
    pq = p * q
    out = {}
    out[(2, 2)] = pq * g2 * ing.e2_v2sq
    out[(1, 2)] = pq * (1.0 - 2.0 * p) * g2 * ing.e2_v2v1
    out[(0, 2)] = pq - pq * pq * g2 * ing.e2_v2f0
    out[(1, 1)] = (pq * pq * (ing.tau11 + 3.0 * g2 * ing.e1_v1sq)
                   + pq * (1.0 - 2.0 * p) ** 2 * g2 * ing.e2_v1sq)
    out[(0, 1)] = (pq * pq * (1.0 - 2.0 * p) * (ing.tau10 - g2 * ing.e2_v1f0)
                   + pq * (1.0 - p - 3.0 * p * p + 2.0 * p ** 3)
                   * g2 * ing.e2_v1)
    out[(0, 0)] = (g2 * ing.mu2 * pq ** 3
                   + g2 * pq * (1.0 - 9.0 * p - p * p
                                + 20.0 * p ** 3 - 10.0 * p ** 4)
                   + ing.tau00 * pq * pq * (1.0 - 2.0 * p) ** 2)
    for (i, j) in list(out):
        out[(j, i)] = out[(i, j)]
    return out


def covariance_cell_normal(i: int, j: int, p: float,
                           ing: CellNormalIngredients) -> float:
    return covariance_planar_structure(p, ing)[(i, j)]


def pv_variance_euler(p: float, gamma2: float, mu2: float) -> float:
    """Asymptotic variance of the Euler density for cell percolation on a
    Poisson-Voronoi tessellation (cell-count fluctuation rate gamma2)."""
    q = 1.0 - p
    return gamma2 * (mu2 * (p * q) ** 3
                     + p * q * (1.0 - 8.0 * p - 6.0 * p * p
                                + 28.0 * p ** 3 - 14.0 * p ** 4))


# ---------------------------------------------------------------------------
# general covariance assembly


@dataclass
class GeneralCovInput:
    """Pair tables for the general covariance formula in mode n.

    x_tables[(i, j)][(k, l, m, r, s)] is the intensity-weighted Palm pair
    mass gamma_k E_k[V_i(F) sum of V_j over S_l^m(s(F)), with |S_n(F)|=r
    and the partners' |S_n(G)|=s].  tau_tables[(i, j)][(k, l, r, s)] are
    the asymptotic covariance rates of the star-size-classified uncolored
    face sums.
    """

    n: int
    x_tables: dict
    tau_tables: dict


def covariance_general(i: int, j: int, p: float, inp: GeneralCovInput) -> float:
    """Asymptotic covariance sigma_{ij}(p) from pair tables: a coloring
    part against centered joint blackness polynomials plus a tessellation
    fluctuation part against products of marginal ones."""
    n = inp.n
    total = 0.0
    for (k, l, m, r, s), w in inp.x_tables.get((i, j), {}).items():
        cov = (g_poly(n, m, k, l, r, s, p)
               - f_poly(n, k, r, p) * f_poly(n, l, s, p))
        total += (-1.0) ** (i + j + k + l) * w * cov
    for (k, l, r, s), tau in inp.tau_tables.get((i, j), {}).items():
        total += ((-1.0) ** (i + j + k + l) * tau
                  * f_poly(n, k, r, p) * f_poly(n, l, s, p))
    return total


def normal_cell_exact_ingredients(gamma2: float = 0.7,
                                  mu2: float = 39.5,
                                  e2_v2sq: float = 2.3,
                                  e2_v2v1: float = 1.7,
                                  e2_v2f0: float = 7.1,
                                  e2_v1sq: float = 1.9,
                                  e1_v1sq: float = 0.41,
                                  e2_v1: float = 1.43,
                                  e2_v1f0: float = 9.3,
                                  tau00: float = 0.8,
                                  tau10: float = 0.55,
                                  tau11: float = 0.62):
    """Exact mutually consistent ingredient sets for a hypothetical normal
    tessellation, in both the display form and the general pair-table form.

    The pair tables follow from the star composition rules of a normal
    tessellation: every derived quantity (neighbor sums, star sizes) is
    expressed through the free cell-level moments, so the two covariance
    routes must agree identically in p.
    """
    g2 = gamma2
    ing = CellNormalIngredients(gamma2, mu2, e2_v2sq, e2_v2v1, e2_v2f0,
                                e2_v1sq, e1_v1sq, e2_v1, e2_v1f0,
                                tau00, tau10, tau11)

    def key(k, l, m):
        return (k, l, m, 3 - k, 3 - l)

    x: dict = {}
    # counts against counts
    x[(0, 0)] = {
        key(0, 0, 1): g2 * (mu2 - 18.0), key(0, 0, 2): 6.0 * g2,
        key(0, 0, 3): 2.0 * g2,
        key(0, 1, 1): g2 * (mu2 - 12.0), key(0, 1, 2): 6.0 * g2,
        key(1, 0, 1): g2 * (mu2 - 12.0), key(1, 0, 2): 6.0 * g2,
        key(0, 2, 1): 6.0 * g2, key(2, 0, 1): 6.0 * g2,
        key(1, 1, 1): g2 * (mu2 - 6.0), key(1, 1, 2): 3.0 * g2,
        key(1, 2, 1): 6.0 * g2, key(2, 1, 1): 6.0 * g2,
        key(2, 2, 1): g2,
    }
    # length against counts (and transpose)
    x[(1, 0)] = {
        key(1, 0, 2): 2.0 * g2 * e2_v1,
        key(1, 0, 1): 2.0 * g2 * e2_v1f0 - 4.0 * g2 * e2_v1,
        key(2, 0, 1): g2 * e2_v1f0,
        key(1, 1, 2): g2 * e2_v1,
        key(1, 1, 1): 2.0 * g2 * e2_v1f0 - 2.0 * g2 * e2_v1,
        key(2, 1, 1): g2 * e2_v1f0,
        key(1, 2, 1): 2.0 * g2 * e2_v1,
        key(2, 2, 1): g2 * e2_v1,
    }
    x[(0, 1)] = {(l, k, m, r, s): w
                 for (k, l, m, s, r), w in x[(1, 0)].items()}
    # length against length
    x[(1, 1)] = {
        key(1, 1, 1): 4.0 * g2 * e2_v1sq - 6.0 * g2 * e1_v1sq,
        key(1, 1, 2): 3.0 * g2 * e1_v1sq,
        key(1, 2, 1): 2.0 * g2 * e2_v1sq,
        key(2, 1, 1): 2.0 * g2 * e2_v1sq,
        key(2, 2, 1): g2 * e2_v1sq,
    }
    # area against counts, length, area
    x[(2, 0)] = {
        key(2, 0, 1): g2 * e2_v2f0,
        key(2, 1, 1): g2 * e2_v2f0,
        key(2, 2, 1): 1.0,
    }
    x[(0, 2)] = {(l, k, m, r, s): w
                 for (k, l, m, s, r), w in x[(2, 0)].items()}
    x[(2, 1)] = {
        key(2, 1, 1): 2.0 * g2 * e2_v2v1,
        key(2, 2, 1): g2 * e2_v2v1,
    }
    x[(1, 2)] = {(l, k, m, r, s): w
                 for (k, l, m, s, r), w in x[(2, 1)].items()}
    x[(2, 2)] = {key(2, 2, 1): g2 * e2_v2sq}

    c = (2.0, 3.0, 1.0)  # count sums scale as c_k times the cell count
    taus: dict = {}
    taus[(0, 0)] = {(k, l, 3 - k, 3 - l): c[k] * c[l] * tau00
                    for k in range(3) for l in range(3)}
    taus[(1, 0)] = {(k, l, 3 - k, 3 - l): c[l] * tau10
                    for k in (1, 2) for l in range(3)}
    taus[(0, 1)] = {(k, l, 3 - k, 3 - l): c[k] * tau10
                    for k in range(3) for l in (1, 2)}
    taus[(1, 1)] = {(k, l, 3 - k, 3 - l): tau11
                    for k in (1, 2) for l in (1, 2)}
    for ij in ((2, 0), (0, 2), (2, 1), (1, 2), (2, 2)):
        taus[ij] = {}  # the area sum over cells has no fluctuation

    return ing, GeneralCovInput(2, x, taus)


# ---------------------------------------------------------------------------
# polynomial helpers


def polynomial_coefficients(fn: Callable[[float], float], degree: int,
                            lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Exact coefficients of a polynomial given as a black box, by solving
    a Vandermonde system on degree+1 Chebyshev nodes."""
    k = np.arange(degree + 1)
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(
        (2 * k + 1) * np.pi / (2 * (degree + 1)))
    vals = np.array([fn(float(x)) for x in nodes])
    van = np.vander(nodes, degree + 1, increasing=True)
    return np.linalg.solve(van, vals)


def polynomial_eval(coeffs: np.ndarray, p) -> np.ndarray:
    return npoly.polyval(p, coeffs)


def polynomial_roots_in_unit_interval(coeffs: np.ndarray,
                                      tol: float = 1e-9) -> np.ndarray:
    roots = npoly.polyroots(coeffs)
    real = roots[np.abs(roots.imag) < tol].real
    return np.sort(real[(real > -tol) & (real < 1 + tol)])
