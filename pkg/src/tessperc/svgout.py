"""Minimal SVG output: tessellation snapshots and curve plots.

Plain SVG 1.1 text, no third party renderer.  Styling is intentionally
simple: black phase dark, white phase light, window outline dashed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geom2d import Window
from .percolation import Coloring
from .tessellation import PlanarTessellation


def _fmt(x) -> str:
    return format(float(x), ".6g")


def _poly_points(pts) -> str:
    return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)


class _Canvas:
    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.parts: list[str] = []

    def add(self, tag: str, **attrs):
        body = attrs.pop("body", None)
        items = " ".join(f'{k.replace("_", "-")}="{v}"'
                         for k, v in attrs.items())
        if body is None:
            self.parts.append(f"<{tag} {items}/>")
        else:
            self.parts.append(f"<{tag} {items}>{body}</{tag}>")

    def to_string(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
                f'width="{_fmt(self.width)}" height="{_fmt(self.height)}" '
                f'viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">')
        return "\n".join([head, *self.parts, "</svg>"]) + "\n"


def render_tessellation(t: PlanarTessellation, coloring: Coloring = None,
                        window: Window = None, size: float = 720.0,
                        path=None) -> str:
    """Draw the tessellation, optionally shaded by a coloring, into SVG."""
    if window is not None:
        box = window.poly
    elif isinstance(t.core_region, Window):
        box = t.core_region.poly
    else:
        box = np.asarray(t.core_region)
    x0, y0 = box.min(axis=0)
    x1, y1 = box.max(axis=0)
    pad = 0.03 * max(x1 - x0, y1 - y0)
    x0, y0, x1, y1 = x0 - pad, y0 - pad, x1 + pad, y1 + pad
    scale = size / max(x1 - x0, y1 - y0)
    width, height = (x1 - x0) * scale, (y1 - y0) * scale

    def tr(pts):
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        out = np.empty_like(pts)
        out[:, 0] = (pts[:, 0] - x0) * scale
        out[:, 1] = (y1 - pts[:, 1]) * scale
        return out

    cv = _Canvas(width, height)
    cv.add("rect", x=0, y=0, width=_fmt(width), height=_fmt(height),
           fill="#ffffff")
    black = coloring.black if coloring is not None else None
    keep_lo = np.array([x0, y0])
    keep_hi = np.array([x1, y1])
    for ci in range(t.n_cells):
        lo, hi = t.cell_bbox[ci, :2], t.cell_bbox[ci, 2:]
        if np.any(hi < keep_lo) or np.any(lo > keep_hi):
            continue
        fill = "#f2f2f2"
        if black is not None:
            fill = "#444444" if black[2][ci] else "#fcfcfc"
        cv.add("polygon", points=_poly_points(tr(t.cell_polygon(ci))),
               fill=fill, stroke="none")
    pts = t.points
    for ei in range(t.n_edges):
        a, b = t.edges[ei]
        seg = np.array([pts[a], pts[b]])
        if np.all(seg[:, 0] < x0) or np.all(seg[:, 0] > x1) \
                or np.all(seg[:, 1] < y0) or np.all(seg[:, 1] > y1):
            continue
        (ax, ay), (bx, by) = tr(seg)
        if black is not None and black[1][ei]:
            stroke, w = "#000000", 1.6
        else:
            stroke, w = "#9a9a9a", 0.7
        cv.add("line", x1=_fmt(ax), y1=_fmt(ay), x2=_fmt(bx), y2=_fmt(by),
               stroke=stroke, stroke_width=_fmt(w),
               stroke_linecap="round")
    if black is not None:
        inside = ((pts[:, 0] >= x0) & (pts[:, 0] <= x1)
                  & (pts[:, 1] >= y0) & (pts[:, 1] <= y1))
        for vi in np.nonzero(inside & black[0])[0]:
            (cx, cy), = tr(pts[vi])
            cv.add("circle", cx=_fmt(cx), cy=_fmt(cy), r="2.1",
                   fill="#000000")
    if window is not None:
        cv.add("polygon", points=_poly_points(tr(window.poly)),
               fill="none", stroke="#2060c0", stroke_width="1.5",
               stroke_dasharray="6,4")
    text = cv.to_string()
    if path is not None:
        Path(path).write_text(text)
    return text


_PALETTE = ("#2060c0", "#c03020", "#208040", "#806020", "#603080", "#207080")


def _nice_ticks(lo: float, hi: float, target: int = 6):
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / target
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if mag * mult >= raw:
            step = mag * mult
            break
    first = np.ceil(lo / step) * step
    ticks = np.arange(first, hi + step * 0.5, step)
    return [0.0 if abs(v) < step * 1e-9 else float(v) for v in ticks]


def render_curves(series: list, xlabel: str = "", ylabel: str = "",
                  title: str = "", size=(680, 460), path=None) -> str:
    """Line/point plot.  Each series is a dict with keys:
    name, x, y, optional yerr, optional points (draw markers only)."""
    w, h = size
    ml, mr, mt, mb = 64.0, 16.0, 34.0, 46.0
    pw, ph = w - ml - mr, h - mt - mb
    xs = np.concatenate([np.asarray(s["x"], dtype=float) for s in series])
    ys = []
    for s in series:
        y = np.asarray(s["y"], dtype=float)
        err = np.asarray(s.get("yerr", np.zeros_like(y)), dtype=float)
        ys.extend([y - err, y + err])
    ys = np.concatenate(ys)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    ypad = 0.06 * (y1 - y0)
    y0, y1 = y0 - ypad, y1 + ypad

    def tx(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def ty(y):
        return mt + (y1 - y) / (y1 - y0) * ph

    cv = _Canvas(w, h)
    cv.add("rect", x=0, y=0, width=w, height=h, fill="#ffffff")
    for v in _nice_ticks(x0, x1):
        cv.add("line", x1=_fmt(tx(v)), y1=_fmt(mt), x2=_fmt(tx(v)),
               y2=_fmt(mt + ph), stroke="#e0e0e0", stroke_width="1")
        cv.add("text", x=_fmt(tx(v)), y=_fmt(mt + ph + 16),
               font_size="11", text_anchor="middle",
               font_family="sans-serif", body=_fmt(round(v, 10)))
    for v in _nice_ticks(y0, y1):
        cv.add("line", x1=_fmt(ml), y1=_fmt(ty(v)), x2=_fmt(ml + pw),
               y2=_fmt(ty(v)), stroke="#e0e0e0", stroke_width="1")
        cv.add("text", x=_fmt(ml - 6), y=_fmt(ty(v) + 4), font_size="11",
               text_anchor="end", font_family="sans-serif",
               body=_fmt(round(v, 10)))
    cv.add("rect", x=_fmt(ml), y=_fmt(mt), width=_fmt(pw), height=_fmt(ph),
           fill="none", stroke="#404040", stroke_width="1")
    for si, s in enumerate(series):
        col = s.get("color", _PALETTE[si % len(_PALETTE)])
        X = np.asarray(s["x"], dtype=float)
        Y = np.asarray(s["y"], dtype=float)
        if "yerr" in s:
            for xx, yy, ee in zip(X, Y, np.asarray(s["yerr"], dtype=float)):
                cv.add("line", x1=_fmt(tx(xx)), y1=_fmt(ty(yy - ee)),
                       x2=_fmt(tx(xx)), y2=_fmt(ty(yy + ee)),
                       stroke=col, stroke_width="1")
        if s.get("points"):
            for xx, yy in zip(X, Y):
                cv.add("circle", cx=_fmt(tx(xx)), cy=_fmt(ty(yy)), r="2.6",
                       fill=col)
        else:
            pts = " ".join(f"{_fmt(tx(xx))},{_fmt(ty(yy))}"
                           for xx, yy in zip(X, Y))
            cv.add("polyline", points=pts, fill="none", stroke=col,
                   stroke_width="1.6")
        cv.add("text", x=_fmt(ml + pw - 8), y=_fmt(mt + 16 + 15 * si),
               font_size="12", text_anchor="end", fill=col,
               font_family="sans-serif", body=s["name"])
    if title:
        cv.add("text", x=_fmt(ml + pw / 2), y="20", font_size="14",
               text_anchor="middle", font_family="sans-serif", body=title)
    if xlabel:
        cv.add("text", x=_fmt(ml + pw / 2), y=_fmt(h - 12), font_size="12",
               text_anchor="middle", font_family="sans-serif", body=xlabel)
    if ylabel:
        cv.add("text", x="16", y=_fmt(mt + ph / 2), font_size="12",
               text_anchor="middle", font_family="sans-serif",
               transform=f"rotate(-90 16 {_fmt(mt + ph / 2)})", body=ylabel)
    text = cv.to_string()
    if path is not None:
        Path(path).write_text(text)
    return text
