"""Monte Carlo estimators for densities, covariances and Palm ingredients.

All estimators follow the same pattern: independent replicates are driven
by child seeds of one master seed, each replicate builds a fresh
tessellation on a padded region around the observation window, and the
replicate statistics are pooled.  Ratio and covariance estimates report
leave-one-out jackknife standard errors.

Colorings across a p-grid reuse the same underlying uniforms per
replicate, so black phases are coupled monotonically in p and curve
estimates vary smoothly.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import CellNormalIngredients, DensityInput
from .geom2d import Window
from .measure import (prepare_window, vi_black_closed, vi_black_interior,
                      vi_steiner_sum)
from .percolation import color, recolor
from .rng import child_seed
from .tessellation import FaceRef, GeneratorConfig, build


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    n: int

    def z(self, ref: float) -> float:
        if self.stderr == 0:
            return float("inf") if self.value != ref else 0.0
        return (self.value - ref) / self.stderr


def make_config(model: str, window: Window, intensity: float = 1.0,
                lattice_code: str = "4.4.4.4", edge_length: float = 1.0,
                padding=None, seed: int = 0) -> GeneratorConfig:
    """Generator configuration whose core region is the given window."""
    return GeneratorConfig(model=model, region=window, intensity=intensity,
                           lattice_code=lattice_code, edge_length=edge_length,
                           padding=padding, seed=seed)


def _map_replicates(worker, args, workers: int):
    if workers and workers > 1:
        chunk = max(1, len(args) // (workers * 4))
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(worker, args, chunksize=chunk))
    return [worker(a) for a in args]


# ---------------------------------------------------------------------------
# jackknife helpers


def jackknife_stat(stat, rows: np.ndarray):
    """Estimate stat(column sums) with a leave-one-replicate-out stderr."""
    rows = np.asarray(rows, dtype=np.float64)
    n = len(rows)
    tot = rows.sum(axis=0)
    full = float(stat(tot))
    if n < 2:
        return full, float("nan")
    loo = np.array([stat(tot - rows[r]) for r in range(n)])
    return full, float(np.sqrt((n - 1) / n * ((loo - loo.mean()) ** 2).sum()))


def jackknife_ratio(num: np.ndarray, den: np.ndarray):
    return jackknife_stat(lambda s: s[0] / s[1], np.column_stack([num, den]))


def jackknife_cov(x: np.ndarray, y: np.ndarray):
    """Sample covariance with a closed-form leave-one-out jackknife."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    if n < 3:
        sxy = float(np.cov(x, y, ddof=1)[0, 1]) if n == 2 else float("nan")
        return sxy, float("nan")
    sx, sy, sxy = x.sum(), y.sum(), (x * y).sum()
    full = (sxy - sx * sy / n) / (n - 1)
    loo = ((sxy - x * y) - (sx - x) * (sy - y) / (n - 1)) / (n - 2)
    err = float(np.sqrt((n - 1) / n * ((loo - loo.mean()) ** 2).sum()))
    return float(full), err


def mean_estimate(vals: np.ndarray) -> Estimate:
    vals = np.asarray(vals, dtype=np.float64)
    n = len(vals)
    err = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    return Estimate(float(vals.mean()), err, n)


# ---------------------------------------------------------------------------
# black phase simulation


_SUM_METHODS = {
    "interior": vi_black_interior,
    "closed": vi_black_closed,
    "steiner": vi_steiner_sum,
}


def _phase_sums_worker(args):
    cfg, n, ps, window, seed, method = args
    t = build(dataclasses.replace(cfg, seed=child_seed(seed, 0)))
    cc = prepare_window(t, window)
    fn = _SUM_METHODS[method]
    base = color(t, n, ps[0], child_seed(seed, 1))
    out = np.empty((len(ps), 3))
    for ip, p in enumerate(ps):
        c = recolor(t, base, p)
        for i in range(3):
            out[ip, i] = fn(cc, c, i)
    return out


@dataclass
class PhaseSums:
    """Raw per-replicate intrinsic volume sums of the black phase.

    sums[r, ip, i] is the V_i sum of replicate r at ps[ip].
    """

    cfg: GeneratorConfig
    n: int
    ps: tuple
    window: Window
    method: str
    seed: int
    sums: np.ndarray

    @property
    def area(self) -> float:
        return self.window.area

    def density(self, ip: int, i: int) -> Estimate:
        return mean_estimate(self.sums[:, ip, i] / self.area)

    def covariance(self, ip: int, i: int, j: int) -> Estimate:
        scale = np.sqrt(self.area)
        v, err = jackknife_cov(self.sums[:, ip, i] / scale,
                               self.sums[:, ip, j] / scale)
        return Estimate(v, err, self.sums.shape[0])


def simulate_phase_sums(cfg: GeneratorConfig, n: int, ps, replicates: int,
                        seed: int, method: str = "interior",
                        window: Window = None, workers: int = 0) -> PhaseSums:
    if method not in _SUM_METHODS:
        raise ValueError(f"unknown method {method!r}")
    window = cfg.region if window is None else window
    ps = tuple(float(p) for p in ps)
    args = [(cfg, n, ps, window, child_seed(seed, r), method)
            for r in range(replicates)]
    res = _map_replicates(_phase_sums_worker, args, workers)
    return PhaseSums(cfg, n, ps, window, method, seed, np.stack(res))


def estimate_density(cfg: GeneratorConfig, n: int, p: float, replicates: int,
                     seed: int, method: str = "steiner",
                     window: Window = None, workers: int = 0):
    """Density estimates (delta_0, delta_1, delta_2) at one p.

    The default sums the signed intrinsic volumes of whole black faces
    with circumcenter-free Steiner point in the window, which removes the
    boundary bias of clipped interior sums.
    """
    sims = simulate_phase_sums(cfg, n, [p], replicates, seed, method,
                               window, workers)
    return tuple(sims.density(0, i) for i in range(3))


def estimate_density_curve(cfg: GeneratorConfig, n: int, ps, replicates: int,
                           seed: int, method: str = "steiner",
                           window: Window = None, workers: int = 0):
    sims = simulate_phase_sums(cfg, n, ps, replicates, seed, method,
                               window, workers)
    return {p: tuple(sims.density(ip, i) for i in range(3))
            for ip, p in enumerate(sims.ps)}, sims


def estimate_covariance(cfg: GeneratorConfig, n: int, ps, replicates: int,
                        seed: int, method: str = "interior",
                        window: Window = None, workers: int = 0):
    """Asymptotic covariance estimates sigma_ij(p) for each p in ps."""
    sims = simulate_phase_sums(cfg, n, ps, replicates, seed, method,
                               window, workers)
    out = {}
    for ip, p in enumerate(sims.ps):
        out[p] = {(i, j): sims.covariance(ip, i, j)
                  for i in range(3) for j in range(3)}
    return out, sims


# ---------------------------------------------------------------------------
# uncolored face sum fluctuations


def _face_sums_worker(args):
    cfg, window, seed = args
    t = build(dataclasses.replace(cfg, seed=child_seed(seed, 0)))
    cc = prepare_window(t, window)
    return np.array([
        cc.s_in[0].sum(),
        cc.s_in[1].sum(),
        cc.s_in[2].sum(),
        t.edge_len[cc.s_in[1]].sum(),
    ])


def estimate_tau(cfg: GeneratorConfig, replicates: int, seed: int,
                 window: Window = None, workers: int = 0) -> dict:
    """Fluctuation rates of the uncolored face sums: tau00 (cell count),
    tau10 (edge length against cell count) and tau11 (edge length)."""
    window = cfg.region if window is None else window
    args = [(cfg, window, child_seed(seed, r)) for r in range(replicates)]
    rows = np.stack(_map_replicates(_face_sums_worker, args, workers))
    scale = np.sqrt(window.area)
    n2 = rows[:, 2] / scale
    ln = rows[:, 3] / scale
    out = {}
    for name, (a, b) in {"tau00": (n2, n2), "tau10": (ln, n2),
                         "tau11": (ln, ln)}.items():
        v, e = jackknife_cov(a, b)
        out[name] = Estimate(v, e, replicates)
    out["counts"] = rows
    return out


# ---------------------------------------------------------------------------
# Palm estimation by minus-sampling


def _star_sizes(t, n: int, k: int) -> np.ndarray:
    """|S_n(F)| for every k-face, vectorized."""
    if k == 0:
        if n == 0:
            return np.ones(t.n_vertices, dtype=np.int64)
        off = t.v2e_off if n == 1 else t.v2c_off
        return off[1:] - off[:-1]
    if k == 1:
        if n == 0:
            return np.full(t.n_edges, 2, dtype=np.int64)
        if n == 1:
            return np.ones(t.n_edges, dtype=np.int64)
        return (t.edge_cells >= 0).sum(axis=1)
    if n == 2:
        return np.ones(t.n_cells, dtype=np.int64)
    return t.cell_nverts.astype(np.int64)


def _palm_worker(args):
    cfg, n, window, seed, r_max, pairs = args
    t = build(dataclasses.replace(cfg, seed=child_seed(seed, 0)))
    cc = prepare_window(t, window)
    acc = {"area": window.area}
    for k in range(3):
        sel = cc.s_in[k]
        acc[("count", k)] = float(sel.sum())
        sizes = np.minimum(_star_sizes(t, n, k), r_max + 1)
        for i in range(k + 1):
            vi = t.intrinsic_volume(k, i)
            masses = np.bincount(sizes[sel], weights=vi[sel],
                                 minlength=r_max + 2)
            for r in np.nonzero(masses)[0]:
                acc[("mass", i, k, int(r))] = float(masses[r])
        counts = np.bincount(sizes[sel], minlength=r_max + 2)
        for r in np.nonzero(counts)[0]:
            acc[("nstar", k, int(r))] = float(counts[r])
    vdeg = t.v2e_off[1:] - t.v2e_off[:-1]
    acc["vdeg"] = float(vdeg[cc.s_in[0]].sum())
    csel = cc.s_in[2]
    v2 = t.intrinsic_volume(2, 2)[csel]
    v1 = t.intrinsic_volume(2, 1)[csel]
    f0 = t.cell_nverts[csel].astype(np.float64)
    acc.update({
        "c_n": float(csel.sum()),
        "c_v2": float(v2.sum()), "c_v2sq": float((v2 * v2).sum()),
        "c_v2v1": float((v2 * v1).sum()), "c_v2f0": float((v2 * f0).sum()),
        "c_v1": float(v1.sum()), "c_v1sq": float((v1 * v1).sum()),
        "c_v1f0": float((v1 * f0).sum()),
        "c_f0": float(f0.sum()), "c_f0sq": float((f0 * f0).sum()),
    })
    esel = cc.s_in[1]
    el = t.edge_len[esel]
    acc["e_n"] = float(esel.sum())
    acc["e_len"] = float(el.sum())
    acc["e_lensq"] = float((el * el).sum())
    for (i, j, k, l, m) in pairs:
        vj = t.intrinsic_volume(l, j)
        vi = t.intrinsic_volume(k, i)
        sel = cc.s_in[k] & t.trusted(k)
        tot = 0.0
        for idx in np.nonzero(sel)[0]:
            partners = t.face_star_shared(FaceRef(k, int(idx)), l, n, m)
            if partners:
                tot += vi[idx] * sum(vj[g.index] for g in partners)
        acc[("pair", i, j, k, l, m)] = tot
        acc[("pairn", i, j, k, l, m)] = float(sel.sum())
    return acc


@dataclass
class PalmEstimate:
    """Pooled minus-sampling sums over replicates with jackknife access."""

    cfg: GeneratorConfig
    n: int
    window: Window
    r_max: int
    rows: dict = field(default_factory=dict)
    replicates: int = 0

    def _col(self, key) -> np.ndarray:
        col = self.rows.get(key)
        if col is None:
            return np.zeros(self.replicates)
        return col

    def _ratio(self, num_key, den_key) -> Estimate:
        v, e = jackknife_ratio(self._col(num_key), self._col(den_key))
        return Estimate(v, e, self.replicates)

    def gamma(self, k: int) -> Estimate:
        return self._ratio(("count", k), "area")

    def n01(self) -> Estimate:
        return self._ratio("vdeg", ("count", 0))

    def mu2(self) -> Estimate:
        return self._ratio("c_f0sq", "c_n")

    def cell_moment(self, name: str) -> Estimate:
        return self._ratio(name, "c_n")

    def edge_moment(self, name: str) -> Estimate:
        return self._ratio(name, "e_n")

    def pkn(self) -> dict:
        """Empirical star-size distributions pkn[(k, r)]."""
        out = {}
        for key, col in self.rows.items():
            if isinstance(key, tuple) and key[0] == "nstar":
                _, k, r = key
                out[(k, r)] = col.sum() / self._col(("count", k)).sum()
        return out

    def density_input(self, i: int) -> DensityInput:
        masses, tails = {}, {}
        area = self._col("area").sum()
        for key, col in self.rows.items():
            if isinstance(key, tuple) and key[0] == "mass" and key[1] == i:
                _, _, k, r = key
                if r > self.r_max:
                    tails[k] = tails.get(k, 0.0) + col.sum() / area
                else:
                    masses[(k, r)] = col.sum() / area
        return DensityInput(self.n, i, masses, tails)

    def ingredients(self, tau00: float, tau10: float,
                    tau11: float) -> CellNormalIngredients:
        return CellNormalIngredients(
            gamma2=self.gamma(2).value,
            mu2=self.mu2().value,
            e2_v2sq=self.cell_moment("c_v2sq").value,
            e2_v2v1=self.cell_moment("c_v2v1").value,
            e2_v2f0=self.cell_moment("c_v2f0").value,
            e2_v1sq=self.cell_moment("c_v1sq").value,
            e1_v1sq=self.edge_moment("e_lensq").value,
            e2_v1=self.cell_moment("c_v1").value,
            e2_v1f0=self.cell_moment("c_v1f0").value,
            tau00=tau00, tau10=tau10, tau11=tau11)

    def pair(self, i, j, k, l, m) -> Estimate:
        return self._ratio(("pair", i, j, k, l, m), "area")

    def exchange_residual(self, i, j, k, l, m) -> Estimate:
        a = self._col(("pair", i, j, k, l, m))
        b = self._col(("pair", j, i, l, k, m))
        area = self._col("area")
        v, e = jackknife_stat(lambda s: (s[0] - s[1]) / s[2],
                              np.column_stack([a, b, area]))
        return Estimate(v, e, self.replicates)


def estimate_palm(cfg: GeneratorConfig, n: int, replicates: int, seed: int,
                  r_max: int = 32, pairs=(), window: Window = None,
                  workers: int = 0) -> PalmEstimate:
    """Palm quantities by minus-sampling faces with Steiner point in the
    window: intensities, star-size mass tables, moment and pair tables.

    pairs is an iterable of (i, j, k, l, m) requests; each transpose
    (j, i, l, k, m) is collected as well for exchange-formula checks.
    """
    window = cfg.region if window is None else window
    want = set()
    for (i, j, k, l, m) in pairs:
        want.add((i, j, k, l, m))
        want.add((j, i, l, k, m))
    want = tuple(sorted(want))
    args = [(cfg, n, window, child_seed(seed, r), r_max, want)
            for r in range(replicates)]
    acc = _map_replicates(_palm_worker, args, workers)
    keys = set().union(*(a.keys() for a in acc))
    rows = {key: np.array([a.get(key, 0.0) for a in acc]) for key in keys}
    return PalmEstimate(cfg, n, window, r_max, rows, replicates)


# ---------------------------------------------------------------------------
# two-point route for the cell count fluctuation (Voronoi)


def _rho_worker(args):
    cfg, n, p, window, seed, r_trunc = args
    t = build(dataclasses.replace(cfg, seed=child_seed(seed, 0)))
    cc = prepare_window(t, window)
    c = color(t, n, p, child_seed(seed, 1))
    pts = t.cell_steiner[cc.s_in[2]]
    rect = window.as_rect()
    x0, y0, x1, y1 = rect
    inner = ((pts[:, 0] >= x0 + r_trunc) & (pts[:, 0] < x1 - r_trunc)
             & (pts[:, 1] >= y0 + r_trunc) & (pts[:, 1] < y1 - r_trunc))
    centers = pts[inner]
    npairs = 0.0
    if len(centers) and len(pts):
        d2 = ((centers[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        npairs = float((d2 <= r_trunc * r_trunc).sum() - len(centers))
    n_black = float((c.black[2] & cc.s_in[2]).sum())
    area_er = (x1 - x0 - 2 * r_trunc) * (y1 - y0 - 2 * r_trunc)
    return np.array([len(pts), n_black, len(centers), npairs,
                     window.area, area_er])


def estimate_rho_voronoi(cfg: GeneratorConfig, p: float, replicates: int,
                         seed: int, r_trunc: float = None,
                         window: Window = None, workers: int = 0) -> dict:
    """Black cell pair fluctuation rate rho = p^2 tau00 by two routes: the
    colored count fluctuation across replicates, and a truncated radial
    pair integral (Ripley K with minus-sampling)."""
    window = cfg.region if window is None else window
    rect = window.as_rect()
    if rect is None:
        raise ValueError("two-point estimation needs a rectangular window")
    if r_trunc is None:
        r_trunc = 6.0 / np.sqrt(cfg.intensity)
    if 2 * r_trunc >= min(rect[2] - rect[0], rect[3] - rect[1]):
        raise ValueError("truncation radius exceeds the window: the pair "
                         "integral would be unsafe at this size")
    args = [(cfg, 2, p, window, child_seed(seed, r), r_trunc)
            for r in range(replicates)]
    rows = np.stack(_map_replicates(_rho_worker, args, workers))

    def tau_radial(s):
        gamma = s[0] / s[4]
        k_hat = s[3] / (gamma * gamma * s[5])
        return gamma + gamma * gamma * (k_hat - np.pi * r_trunc * r_trunc)

    tr, tr_err = jackknife_stat(tau_radial, rows)
    pq = p * (1.0 - p)

    def rho_fluct_stat(nb):
        var, _ = jackknife_cov(nb, nb)
        gamma = rows[:, 0].sum() / rows[:, 4].sum()
        return var - pq * gamma

    scale = np.sqrt(window.area)
    nb = rows[:, 1] / scale
    n = len(nb)
    loo = np.array([rho_fluct_stat(np.delete(nb, r)) for r in range(n)])
    rf = rho_fluct_stat(nb)
    rf_err = float(np.sqrt((n - 1) / n * ((loo - loo.mean()) ** 2).sum()))
    gamma_v, gamma_e = jackknife_ratio(rows[:, 0], rows[:, 4])
    return {
        "tau_radial": Estimate(tr, tr_err, replicates),
        "rho_radial": Estimate(p * p * tr, p * p * tr_err, replicates),
        "rho_fluct": Estimate(rf, rf_err, replicates),
        "gamma": Estimate(gamma_v, gamma_e, replicates),
        "r_trunc": float(r_trunc),
    }


# ---------------------------------------------------------------------------
# output


def write_csv(path, meta: dict, columns: dict) -> Path:
    """Write columns to CSV with '# key=value' metadata lines.

    Formatting is deterministic (sorted metadata, 17 significant digits),
    so identical inputs produce byte-identical files.
    """
    path = Path(path)
    names = list(columns)
    cols = [columns[name] for name in names]
    lines = [f"# {k}={meta[k]}" for k in sorted(meta)]
    lines.append(",".join(names))
    for row in zip(*cols):
        cells = []
        for v in row:
            if isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            elif isinstance(v, str):
                cells.append(v)
            else:
                cells.append(format(float(v), ".17g"))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path
