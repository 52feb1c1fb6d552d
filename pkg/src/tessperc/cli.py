"""Command line interface.

Subcommands cover the full workflow: generate a tessellation, color it,
measure the black phase, run Monte Carlo estimates, emit closed-form
reference curves, compare the two, and render SVG output.

Exit codes: 0 on success, 2 when a comparison exceeds its z threshold,
1 on validation or oracle failures.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import analytic, estimators
from .geom2d import Window, point_in_convex, unit_square_window
from .measure import (duality_residuals, euler_combinatorial, euler_raster,
                      kinematic_residual, prepare_window, vi_black_boundary,
                      vi_black_closed, vi_black_interior, vi_steiner_sum)
from .percolation import Coloring, color
from .tessellation import (ARCHIMEDEAN_CODES, build, load_tessellation,
                           save_tessellation, validate)


def _add_model_args(sp, need_seed=True):
    sp.add_argument("--model", choices=("voronoi", "lattice", "line"),
                    required=True)
    sp.add_argument("--intensity", type=float, default=1.0,
                    help="points per unit area (voronoi) or line length "
                         "density (line)")
    sp.add_argument("--lattice-code", choices=ARCHIMEDEAN_CODES,
                    default="4.4.4.4")
    sp.add_argument("--edge-length", type=float, default=1.0)
    sp.add_argument("--t", type=float, default=100.0,
                    help="window volume; the window is sqrt(t) x sqrt(t)")
    sp.add_argument("--padding", type=float, default=None)
    if need_seed:
        sp.add_argument("--seed", type=int, default=0)


def _config_from(args) -> estimators.GeneratorConfig:
    win = unit_square_window(args.t)
    return estimators.make_config(
        args.model, win, intensity=args.intensity,
        lattice_code=args.lattice_code, edge_length=args.edge_length,
        padding=args.padding, seed=getattr(args, "seed", 0))


def _parse_ps(args) -> list:
    ps = []
    if args.p:
        ps.extend(float(x) for x in args.p.split(","))
    if args.p_grid:
        lo, hi, step = (float(x) for x in args.p_grid.split(":"))
        ps.extend(np.arange(lo, hi + step * 1e-9, step).round(12).tolist())
    if not ps:
        raise SystemExit("need --p or --p-grid")
    return ps


def _window_from(args, t) -> Window:
    if getattr(args, "window_t", None):
        win = unit_square_window(args.window_t)
        core = t.core_region.poly
        for corner in win.poly:
            if not point_in_convex(corner, core):
                raise SystemExit("window does not fit in the stored region")
        return win
    return t.core_region


def cmd_generate(args) -> int:
    cfg = _config_from(args)
    t = build(cfg)
    if args.out:
        save_tessellation(t, args.out)
    line = (f"model={args.model} vertices={t.n_vertices} "
            f"edges={t.n_edges} cells={t.n_cells}")
    print(line)
    if args.validate:
        rep = validate(t)
        print(json.dumps(rep.to_dict(), sort_keys=True))
        return 0 if rep.ok else 1
    return 0


def cmd_color(args) -> int:
    t, _ = load_tessellation(args.infile)
    c = color(t, args.mode, args.p, args.seed)
    save_tessellation(t, args.out, coloring=c)
    counts = [int(b.sum()) for b in c.black]
    print(f"mode={args.mode} p={args.p} black={counts}")
    return 0


def cmd_measure(args) -> int:
    t, cdoc = load_tessellation(args.infile)
    if cdoc is None:
        raise SystemExit("input has no coloring; run `color` first")
    c = Coloring.from_dict(cdoc)
    window = _window_from(args, t)
    cc = prepare_window(t, window)
    out = {"window_area": window.area, "mode": c.mode_n, "p": c.p}
    fns = {"interior": vi_black_interior, "boundary": vi_black_boundary,
           "closed": vi_black_closed, "steiner": vi_steiner_sum}
    wanted = fns if args.method == "all" else {args.method: fns[args.method]}
    for name, fn in wanted.items():
        out[name] = [fn(cc, c, i) for i in range(3)]
    out["kinematic_residual"] = [kinematic_residual(cc, i) for i in range(3)]
    status = 0
    if args.check_euler:
        # open-window chi: signed interior sum against the combinatorial count
        chi_open = vi_black_interior(cc, c, 0)
        comb = euler_combinatorial(t, c, window)
        # closed-window chi: closed sum against the raster oracle
        chi_closed = vi_black_closed(cc, c, 0)
        out["euler_formula_open"] = chi_open
        out["euler_combinatorial"] = comb
        out["euler_formula_closed"] = chi_closed
        try:
            rast = euler_raster(t, c, window)
            out["euler_raster"] = rast
        except RuntimeError as exc:
            rast = None
            out["euler_raster"] = None
            out["euler_raster_note"] = str(exc)
        ok = abs(chi_open - comb) < 1e-6 and (
            rast is None or abs(chi_closed - rast) < 1e-6)
        out["euler_ok"] = bool(ok)
        if not ok:
            status = 1
    if args.check_duality:
        if c.mode_n != 2:
            raise SystemExit("duality check applies to cell percolation")
        res = duality_residuals(cc, c)
        out["duality_residuals"] = [float(r) for r in res]
        if max(abs(r) for r in res) > 1e-6:
            status = 1
    print(json.dumps(out, sort_keys=True))
    return status


def cmd_estimate(args) -> int:
    cfg = _config_from(args)
    ps = _parse_ps(args)
    sims = estimators.simulate_phase_sums(
        cfg, args.mode, ps, args.replicates, args.seed,
        method=args.method, workers=args.workers)
    cols = {"p": list(sims.ps)}
    for i in range(3):
        vals, errs = [], []
        for ip in range(len(sims.ps)):
            est = sims.density(ip, i)
            vals.append(est.value)
            errs.append(est.stderr)
        cols[f"delta{i}"] = vals
        cols[f"delta{i}_err"] = errs
    if args.covariance:
        for i in range(3):
            for j in range(i, 3):
                vals, errs = [], []
                for ip in range(len(sims.ps)):
                    est = sims.covariance(ip, i, j)
                    vals.append(est.value)
                    errs.append(est.stderr)
                cols[f"sigma{i}{j}"] = vals
                cols[f"sigma{i}{j}_err"] = errs
    meta = {"model": args.model, "mode": args.mode, "t": args.t,
            "replicates": args.replicates, "seed": args.seed,
            "method": args.method, "intensity": args.intensity,
            "lattice_code": args.lattice_code,
            "edge_length": args.edge_length}
    estimators.write_csv(args.out, meta, cols)
    print(f"wrote {args.out} ({len(ps)} p values, "
          f"{args.replicates} replicates)")
    return 0


def cmd_analytic(args) -> int:
    ps = _parse_ps(args)
    cols = {"p": ps}
    if args.model == "lattice":
        inputs = [analytic.archimedean_density_input(
            args.lattice_code, args.mode, i, args.edge_length)
            for i in range(3)]
    elif args.model == "voronoi":
        if args.mode != 2:
            raise SystemExit("closed forms for voronoi need cell mode")
        inputs = [analytic.poisson_voronoi_density_input(args.intensity, i)
                  for i in range(3)]
    else:
        if args.mode != 2:
            raise SystemExit("closed forms for lines need cell mode")
        inputs = [analytic.poisson_line_density_input(args.intensity, i)
                  for i in range(3)]
    for i, di in enumerate(inputs):
        cols[f"delta{i}"] = [analytic.density_formula_general(di, p)[0]
                             for p in ps]
    if args.mu2 is not None:
        if args.model != "voronoi":
            raise SystemExit("--mu2 drives the voronoi variance formula")
        cols["sigma00"] = [analytic.pv_variance_euler(p, args.intensity,
                                                      args.mu2) for p in ps]
    meta = {"model": args.model, "mode": args.mode,
            "intensity": args.intensity, "lattice_code": args.lattice_code,
            "edge_length": args.edge_length, "kind": "analytic"}
    estimators.write_csv(args.out, meta, cols)
    print(f"wrote {args.out} ({len(ps)} p values)")
    return 0


def _read_csv(path):
    meta, header, rows = {}, None, []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val
                continue
            cells = line.split(",")
            if header is None:
                header = cells
            else:
                rows.append([float(x) for x in cells])
    data = {name: np.array([r[i] for r in rows])
            for i, name in enumerate(header or [])}
    return meta, data


def cmd_compare(args) -> int:
    _, a = _read_csv(args.mc)
    _, b = _read_csv(args.ref)
    if "p" not in a or "p" not in b:
        raise SystemExit("both files need a p column")
    shared = [k for k in a if k in b and k != "p"
              and not k.endswith("_err") and f"{k}_err" in a]
    if args.columns:
        wanted = args.columns.split(",")
        shared = [k for k in shared if k in wanted]
    if not shared:
        raise SystemExit("no comparable columns")
    bmap = {round(p, 10): i for i, p in enumerate(b["p"])}
    worst = 0.0
    report = []
    for name in shared:
        zmax, at = 0.0, None
        for i, p in enumerate(a["p"]):
            j = bmap.get(round(p, 10))
            if j is None:
                continue
            err = a[f"{name}_err"][i]
            if f"{name}_err" in b:
                err = float(np.hypot(err, b[f"{name}_err"][j]))
            if err == 0:
                continue
            z = abs(a[name][i] - b[name][j]) / err
            if z > zmax:
                zmax, at = z, p
        report.append((name, zmax, at))
        worst = max(worst, zmax)
    for name, zmax, at in report:
        print(f"{name}: max|z| = {zmax:.3f}" +
              (f" at p = {at}" if at is not None else ""))
    if worst > args.z:
        print(f"FAIL: worst z {worst:.3f} exceeds threshold {args.z}")
        return 2
    print(f"OK: worst z {worst:.3f} within threshold {args.z}")
    return 0


def cmd_render(args) -> int:
    from .svgout import render_curves, render_tessellation
    if args.curves:
        meta, data = _read_csv(args.curves)
        ps = data["p"]
        series = []
        for name, vals in data.items():
            if name == "p" or name.endswith("_err"):
                continue
            s = {"name": name, "x": ps, "y": vals}
            if f"{name}_err" in data:
                s["yerr"] = data[f"{name}_err"]
                s["points"] = True
            series.append(s)
        if args.ref:
            _, ref = _read_csv(args.ref)
            for name, vals in ref.items():
                if name == "p" or name.endswith("_err"):
                    continue
                series.append({"name": f"{name} ref", "x": ref["p"], "y": vals})
        render_curves(series, xlabel="p", title=meta.get("model", ""),
                      path=args.out)
    else:
        if not args.infile:
            raise SystemExit("need --in or --curves")
        t, cdoc = load_tessellation(args.infile)
        c = Coloring.from_dict(cdoc) if cdoc else None
        win = _window_from(args, t) if args.window_t else None
        render_tessellation(t, coloring=c, window=win, size=args.size,
                            path=args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_validate(args) -> int:
    t, _ = load_tessellation(args.infile)
    rep = validate(t)
    print(json.dumps(rep.to_dict(), sort_keys=True))
    status = 0 if rep.ok else 1
    for spec in args.oracle or []:
        mode_s, p_s, seed_s = spec.split(":")
        c = color(t, int(mode_s), float(p_s), int(seed_s))
        window = Window(t.core_region.polygon,
                        t.core_region.scale_t * 0.49,
                        t.core_region.offset)
        cc = prepare_window(t, window)
        chi_open = vi_black_interior(cc, c, 0)
        chi_closed = vi_black_closed(cc, c, 0)
        comb = euler_combinatorial(t, c, window)
        try:
            rast = euler_raster(t, c, window)
            rnote = str(rast)
        except RuntimeError:
            rast = None
            rnote = "unstable"
        ok = abs(chi_open - comb) < 1e-6 and (
            rast is None or abs(chi_closed - rast) < 1e-6)
        print(f"oracle mode={mode_s} p={p_s} seed={seed_s}: "
              f"open={chi_open}/{comb} closed={chi_closed}/{rnote} "
              f"{'ok' if ok else 'MISMATCH'}")
        if not ok:
            status = 1
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tessperc",
        description="Face percolation on planar tessellations")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("generate", help="build and store a tessellation")
    _add_model_args(sp)
    sp.add_argument("--out", default=None)
    sp.add_argument("--validate", action="store_true")
    sp.set_defaults(fn=cmd_generate)

    sp = sub.add_parser("color", help="color a stored tessellation")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--mode", type=int, choices=(0, 1, 2), required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_color)

    sp = sub.add_parser("measure", help="intrinsic volumes of the black "
                                        "phase in a window")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--window-t", type=float, default=None)
    sp.add_argument("--method", default="all",
                    choices=("all", "interior", "boundary", "closed",
                             "steiner"))
    sp.add_argument("--check-euler", action="store_true")
    sp.add_argument("--check-duality", action="store_true")
    sp.set_defaults(fn=cmd_measure)

    sp = sub.add_parser("estimate", help="Monte Carlo density/covariance "
                                         "estimates over a p grid")
    _add_model_args(sp)
    sp.add_argument("--mode", type=int, choices=(0, 1, 2), required=True)
    sp.add_argument("--p", default=None, help="comma separated values")
    sp.add_argument("--p-grid", default=None, help="lo:hi:step")
    sp.add_argument("--replicates", type=int, default=100)
    sp.add_argument("--method", default="steiner",
                    choices=tuple(estimators._SUM_METHODS))
    sp.add_argument("--covariance", action="store_true")
    sp.add_argument("--workers", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_estimate)

    sp = sub.add_parser("analytic", help="closed-form reference curves")
    _add_model_args(sp, need_seed=False)
    sp.add_argument("--mode", type=int, choices=(0, 1, 2), required=True)
    sp.add_argument("--p", default=None)
    sp.add_argument("--p-grid", default=None)
    sp.add_argument("--mu2", type=float, default=None,
                    help="second moment of the cell vertex count, enables "
                         "the voronoi Euler variance column")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_analytic)

    sp = sub.add_parser("compare", help="z-score comparison of two CSVs")
    sp.add_argument("--mc", required=True)
    sp.add_argument("--ref", required=True)
    sp.add_argument("--z", type=float, default=3.0)
    sp.add_argument("--columns", default=None)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("render", help="SVG snapshot or curve plot")
    sp.add_argument("--in", dest="infile", default=None)
    sp.add_argument("--curves", default=None,
                    help="CSV of curves over p (from estimate/analytic)")
    sp.add_argument("--ref", default=None,
                    help="second CSV drawn as reference lines")
    sp.add_argument("--window-t", type=float, default=None)
    sp.add_argument("--size", type=float, default=720.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_render)

    sp = sub.add_parser("validate", help="structural validation and Euler "
                                         "oracle checks")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--oracle", action="append", default=None,
                    metavar="MODE:P:SEED")
    sp.set_defaults(fn=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
