"""DOT and SVG renderings of CODYMs and delta models.

Two display modes: ``frequency`` (percentages, sequential yellow-to-red
ramp) and ``delta`` (signed differences, blue-white-red ramp symmetric about
zero).  Edge width and color follow ``|weight|``, node area follows the
observed state percentage.  With a significance report, non-significant
transitions are dashed and non-significant states gray.

Output is a pure function of the inputs: identical inputs give identical bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import CodymModel, DeltaModel, Label, check_order, shift, state_name
from .errors import ValidationError
from .nulls import SignificanceReport

FREQUENCY_STOPS = ((255, 237, 160), (254, 178, 76), (240, 59, 32), (128, 0, 38))
DELTA_STOPS = ((33, 102, 172), (146, 197, 222), (247, 247, 247), (244, 165, 130), (178, 24, 43))
SIGNIFICANT_FILL = "#000000"
MUTED_FILL = "#9e9e9e"
WIDTH_RANGE = (0.5, 8.0)
NODE_DIAMETER = (0.35, 1.1)  # inches in DOT; scaled for SVG

# hand-placed coordinates (x right, y up) for the common orders
_FIXED_LAYOUTS = {
    2: {"SS": (0.0, 0.0), "SL": (1.5, 1.0), "LS": (1.5, -1.0), "LL": (3.0, 0.0)},
    3: {
        "SSS": (0.0, 0.0), "SSL": (1.4, 1.3), "LSS": (1.4, -1.3),
        "SLS": (2.5, 0.0), "LSL": (3.7, 0.0),
        "SLL": (4.8, 1.3), "LLS": (4.8, -1.3), "LLL": (6.2, 0.0),
    },
}

Renderable = Union[CodymModel, DeltaModel]


@dataclass(frozen=True)
class VizSpec:
    mode: str = "frequency"
    width_range: tuple[float, float] = WIDTH_RANGE
    scale: Optional[float] = None  # fixes max |w| for the color/width scale
    title: str = ""

    def __post_init__(self):
        if self.mode not in ("frequency", "delta"):
            raise ValidationError(f"unknown mode {self.mode!r}")


def layout_positions(order: int) -> dict[str, tuple[float, float]]:
    """Node coordinates: fixed for orders 2 and 3, layered by number of L's otherwise."""
    order = check_order(order)
    if order in _FIXED_LAYOUTS:
        return dict(_FIXED_LAYOUTS[order])
    layers: dict[int, list[str]] = {}
    for code in range(2 ** order):
        name = state_name(code, order)
        layers.setdefault(name.count("L"), []).append(name)
    pos = {}
    for n_long, names in layers.items():
        names.sort()
        m = len(names)
        for i, name in enumerate(names):
            pos[name] = (1.5 * n_long, 1.2 * ((m - 1) / 2 - i))
    return pos


def _lerp_stops(stops, t: float) -> str:
    t = min(1.0, max(0.0, t))
    seg = t * (len(stops) - 1)
    i = min(int(seg), len(stops) - 2)
    f = seg - i
    rgb = [round(a + (b - a) * f) for a, b in zip(stops[i], stops[i + 1])]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def color_position(w: float, mode: str, scale: float) -> float:
    """Position in [0, 1] on the mode's colormap; delta mode puts 0 at 0.5."""
    if scale <= 0:
        return 0.5 if mode == "delta" else 0.0
    if mode == "delta":
        return 0.5 + 0.5 * max(-1.0, min(1.0, w / scale))
    return max(0.0, min(1.0, w / scale))


def edge_color(w: float, mode: str, scale: float) -> str:
    stops = DELTA_STOPS if mode == "delta" else FREQUENCY_STOPS
    return _lerp_stops(stops, color_position(w, mode, scale))


def edge_width(w: float, scale: float, width_range=WIDTH_RANGE) -> float:
    lo, hi = width_range
    if scale <= 0:
        return lo
    return lo + (hi - lo) * min(1.0, abs(w) / scale)


def _fmt_pct(v: float, signed: bool) -> str:
    v = round(v, 1)
    if v == 0:
        return "0.0"
    return f"{v:+.1f}" if signed else f"{v:.1f}"


@dataclass(frozen=True)
class _Prepared:
    order: int
    mode: str
    edges: list         # (src, label, dst, weight, significant)
    states: list        # (name, pct, significant)
    scale: float
    state_max: float


def _prepare(model: Renderable, report: Optional[SignificanceReport], spec: VizSpec) -> _Prepared:
    if isinstance(model, CodymModel):
        if spec.mode != "frequency":
            raise ValidationError("frequency models render only in frequency mode")
        weights = model.transition_freq
        state_pct = model.state_freq
        if np.any(weights < -1e-12):
            raise ValidationError("frequency mode cannot show negative weights")
    elif isinstance(model, DeltaModel):
        if spec.mode != "delta":
            raise ValidationError("delta models render only in delta mode")
        weights = model.delta
        state_pct = model.state_obs
    else:
        raise ValidationError(f"cannot render {type(model).__name__}")
    order = model.order
    if report is not None and report.order != order:
        raise ValidationError("report order does not match the model")

    edges, states = [], []
    for code in range(2 ** order):
        name = state_name(code, order)
        sig = True if report is None else bool(report.state_significant[code])
        states.append((name, float(state_pct[code]), sig))
        for lab in (Label.S, Label.L):
            dst = state_name(shift(code, lab, order), order)
            esig = True if report is None else bool(report.significant[code, lab])
            edges.append((name, str(lab), dst, float(weights[code, lab]), esig))
    scale = spec.scale if spec.scale is not None else max((abs(e[3]) for e in edges), default=0.0)
    state_max = max((s[1] for s in states), default=0.0)
    return _Prepared(order, spec.mode, edges, states, scale, state_max)


def _node_diameter(pct: float, state_max: float) -> float:
    lo, hi = NODE_DIAMETER
    if state_max <= 0 or pct <= 0:
        return lo
    return max(lo, hi * math.sqrt(pct / state_max))


def _node_fill(pct: float, significant: bool) -> str:
    return SIGNIFICANT_FILL if significant and pct > 0 else MUTED_FILL


def _default_spec(model) -> VizSpec:
    return VizSpec(mode="delta" if isinstance(model, DeltaModel) else "frequency")


def render_dot(model: Renderable, report: Optional[SignificanceReport] = None,
               spec: Optional[VizSpec] = None) -> str:
    spec = spec or _default_spec(model)
    p = _prepare(model, report, spec)
    pos = layout_positions(p.order)
    signed = p.mode == "delta"
    lines = [
        "digraph codym {",
        '  graph [layout=neato, splines=true, overlap=false, outputorder=edgesfirst'
        + (f', label="{spec.title}", labelloc=t' if spec.title else "") + "];",
        '  node [shape=circle, style=filled, fixedsize=true, fontname="Helvetica", fontsize=10];',
        '  edge [fontname="Helvetica", fontsize=9, arrowsize=0.6];',
    ]
    for name, pct, sig in p.states:
        x, y = pos[name]
        d = _node_diameter(pct, p.state_max)
        fill = _node_fill(pct, sig)
        lines.append(
            f'  "{name}" [pos="{x:.2f},{y:.2f}!", width={d:.3f}, fillcolor="{fill}", '
            f'fontcolor="#ffffff", label="{name} ({pct:.1f}%)"];'
        )
    for src, lab, dst, w, sig in p.edges:
        width = edge_width(w, p.scale, spec.width_range)
        color = edge_color(w, p.mode, p.scale)
        style = "solid" if sig else "dashed"
        lines.append(
            f'  "{src}" -> "{dst}" [label="{lab} ({_fmt_pct(w, signed)}%)", '
            f'penwidth={width:.2f}, color="{color}", style={style}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- SVG -------------------------------------------------------------------

_PX = 110.0
_LOOP_REACH = 2.2


def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _edge_geometry(p0, p1, r0, r1, bend):
    """Cubic from circle 0 to circle 1, bowed to the left of the direction of travel."""
    (x0, y0), (x1, y1) = p0, p1
    dx, dy = x1 - x0, y1 - y0
    dist = math.hypot(dx, dy) or 1.0
    ux, uy = dx / dist, dy / dist
    nx, ny = uy, -ux
    off = bend * dist
    sx, sy = x0 + ux * r0 + nx * r0 * 0.35, y0 + uy * r0 + ny * r0 * 0.35
    ex, ey = x1 - ux * r1 + nx * r1 * 0.35, y1 - uy * r1 + ny * r1 * 0.35
    c1 = (sx + (ex - sx) * 0.25 + nx * off, sy + (ey - sy) * 0.25 + ny * off)
    c2 = (sx + (ex - sx) * 0.75 + nx * off, sy + (ey - sy) * 0.75 + ny * off)
    mid = (0.125 * sx + 0.375 * c1[0] + 0.375 * c2[0] + 0.125 * ex,
           0.125 * sy + 0.375 * c1[1] + 0.375 * c2[1] + 0.125 * ey)
    return (sx, sy), c1, c2, (ex, ey), mid


def _loop_geometry(c, r, outward):
    """Self-loop on the side of the node facing away from the graph centre."""
    (x, y) = c
    ox, oy = outward
    a = math.atan2(oy, ox)
    s = (x + r * math.cos(a - 0.5), y + r * math.sin(a - 0.5))
    e = (x + r * math.cos(a + 0.5), y + r * math.sin(a + 0.5))
    reach = max(r, 22.0) * _LOOP_REACH
    c1 = (x + reach * math.cos(a - 0.7), y + reach * math.sin(a - 0.7))
    c2 = (x + reach * math.cos(a + 0.7), y + reach * math.sin(a + 0.7))
    mid = (x + (reach * 0.8 + 28) * math.cos(a), y + (reach * 0.8 + 14) * math.sin(a) + 4)
    return s, c1, c2, e, mid


def render_svg(model: Renderable, report: Optional[SignificanceReport] = None,
               spec: Optional[VizSpec] = None) -> str:
    spec = spec or _default_spec(model)
    p = _prepare(model, report, spec)
    pos = layout_positions(p.order)
    xs = [v[0] for v in pos.values()]
    ys = [v[1] for v in pos.values()]
    xmin, xmax, ymin, ymax = min(xs), max(xs), min(ys), max(ys)
    legend_h = 70.0
    r_max = NODE_DIAMETER[1] * _PX / 2.4
    margin = r_max * (_LOOP_REACH * 0.8 + 0.3) + 55.0
    width = (xmax - xmin) * _PX + 2 * margin
    height = (ymax - ymin) * _PX + 2 * margin + legend_h
    cx, cy = (xmin + xmax) / 2, (ymin + ymax) / 2

    def to_px(name):
        x, y = pos[name]
        return (margin + (x - xmin) * _PX, margin + (ymax - y) * _PX)

    px = {name: to_px(name) for name, _, _ in p.states}
    radius = {name: _node_diameter(pct, p.state_max) * _PX / 2.4 for name, pct, _ in p.states}
    signed = p.mode == "delta"
    stops = DELTA_STOPS if p.mode == "delta" else FREQUENCY_STOPS

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_f(width)}" '
        f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">',
        "<defs>",
    ]
    edge_colors = {e: edge_color(e[3], p.mode, p.scale) for e in p.edges}
    for color in sorted(set(edge_colors.values())):
        out.append(
            f'<marker id="arrow{color[1:]}" viewBox="0 0 10 10" refX="9" refY="5" '
            f'markerUnits="userSpaceOnUse" markerWidth="11" markerHeight="11" orient="auto">'
            f'<polygon points="0,0 10,5 0,10" fill="{color}"/></marker>'
        )
    out += [
        '<linearGradient id="colorbar" x1="0" y1="0" x2="1" y2="0">',
    ]
    for i, rgb in enumerate(stops):
        off = 100.0 * i / (len(stops) - 1)
        out.append(f'<stop offset="{_f(off)}%" stop-color="#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"/>')
    out += ["</linearGradient>", "</defs>",
            f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="#ffffff"/>']
    if spec.title:
        out.append(f'<text x="{_f(width / 2)}" y="28" text-anchor="middle" '
                   f'font-family="Helvetica" font-size="16">{spec.title}</text>')

    pairs = {(s, d) for s, _, d, _, _ in p.edges}
    centre = (margin + (cx - xmin) * _PX, margin + (ymax - cy) * _PX)
    out.append('<g id="edges" fill="none">')
    for src, lab, dst, w, sig in p.edges:
        if src == dst:
            c = px[src]
            ox, oy = c[0] - centre[0], c[1] - centre[1]
            if abs(ox) < 1e-9 and abs(oy) < 1e-9:
                ox, oy = 0.0, -1.0
            g = _loop_geometry(c, radius[src], (ox, oy))
        else:
            bend = 0.18 if (dst, src) in pairs else 0.08
            g = _edge_geometry(px[src], px[dst], radius[src], radius[dst], bend)
        s, c1, c2, e, mid = g
        color = edge_colors[(src, lab, dst, w, sig)]
        dash = "" if sig else ' stroke-dasharray="6,4"'
        out.append(
            f'<path class="edge" data-transition="{src}-{lab}" '
            f'd="M {_f(s[0])} {_f(s[1])} C {_f(c1[0])} {_f(c1[1])} {_f(c2[0])} {_f(c2[1])} '
            f'{_f(e[0])} {_f(e[1])}" stroke="{color}" '
            f'stroke-width="{_f(edge_width(w, p.scale, spec.width_range))}"{dash} '
            f'marker-end="url(#arrow{color[1:]})"/>'
        )
        out.append(f'<text x="{_f(mid[0])}" y="{_f(mid[1])}" text-anchor="middle" '
                   f'font-family="Helvetica" font-size="10" fill="#333333">{lab} ({_fmt_pct(w, signed)}%)</text>')
    out.append("</g>")

    out.append('<g id="states">')
    for name, pct, sig in p.states:
        x, y = px[name]
        out.append(f'<circle class="state" data-state="{name}" cx="{_f(x)}" cy="{_f(y)}" '
                   f'r="{_f(radius[name])}" fill="{_node_fill(pct, sig)}"/>')
        out.append(f'<text x="{_f(x)}" y="{_f(y - 2)}" text-anchor="middle" font-family="Helvetica" '
                   f'font-size="11" font-weight="bold" fill="#ffffff">{name}</text>')
        out.append(f'<text x="{_f(x)}" y="{_f(y + 11)}" text-anchor="middle" font-family="Helvetica" '
                   f'font-size="9" fill="#ffffff">{pct:.1f}%</text>')
    out.append("</g>")

    bar_w, bar_h = min(320.0, width - 60.0), 14.0
    bx, by = (width - bar_w) / 2, height - legend_h + 10
    lo = -p.scale if p.mode == "delta" else 0.0
    label = "Delta frequency (%)" if p.mode == "delta" else "Frequency (%)"
    out += [
        '<g id="legend">',
        f'<rect x="{_f(bx)}" y="{_f(by)}" width="{_f(bar_w)}" height="{_f(bar_h)}" '
        f'fill="url(#colorbar)" stroke="#444444" stroke-width="0.5"/>',
        f'<text x="{_f(bx)}" y="{_f(by + bar_h + 14)}" text-anchor="start" font-family="Helvetica" '
        f'font-size="10">{_fmt_pct(lo, signed)}</text>',
    ]
    if p.mode == "delta":
        out.append(f'<text x="{_f(bx + bar_w / 2)}" y="{_f(by + bar_h + 14)}" text-anchor="middle" '
                   f'font-family="Helvetica" font-size="10">0.0</text>')
    out += [
        f'<text x="{_f(bx + bar_w)}" y="{_f(by + bar_h + 14)}" text-anchor="end" '
        f'font-family="Helvetica" font-size="10">{_fmt_pct(p.scale, signed)}</text>',
        f'<text x="{_f(width / 2)}" y="{_f(by - 4)}" text-anchor="middle" font-family="Helvetica" '
        f'font-size="10">{label}</text>',
        "</g>",
        "</svg>",
    ]
    return "\n".join(out) + "\n"
