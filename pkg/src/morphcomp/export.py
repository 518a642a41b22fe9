"""File outputs: iteration history CSV, component table, SVG plots.

All writers are deterministic: identical inputs produce byte-identical
files, which the reproducibility tests rely on.
"""

from __future__ import annotations

import os
from typing import Iterable, Sequence

import numpy as np

from .fem import Mesh
from .geometry import Component, Regularization, structure_tdf

HISTORY_HEADER = ("iteration,compliance,volume,volume_fraction,"
                  "constraint_value,max_design_change")
COMPONENT_HEADER = "component,x0,y0,L_half,t_half,p"

_SVG_SCALE = 240           # pixels per domain length unit
_FILL = "#404040"
_OUTLINE = "#000000"


def _write_text(path: str, text: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def export_history_csv(records: Sequence, path: str) -> None:
    """One row per iteration; floats in shortest round-trip form."""
    if not records:
        raise ValueError("history must contain at least one record")
    lines = [HISTORY_HEADER]
    for rec in records:
        lines.append(",".join([
            str(rec.iteration),
            repr(float(rec.compliance)),
            repr(float(rec.volume)),
            repr(float(rec.volume_fraction)),
            repr(float(rec.constraint_value)),
            repr(float(rec.max_design_change)),
        ]))
    _write_text(path, "\n".join(lines) + "\n")


def export_component_table(comps: Sequence[Component], path: str) -> None:
    """Half-length convention and fixed two-decimal formatting."""
    if not comps:
        raise ValueError("component table must contain at least one component")
    lines = [COMPONENT_HEADER]
    for num, c in enumerate(comps, start=1):
        lines.append(f"{num},{c.center_x:.2f},{c.center_y:.2f},"
                     f"{c.length / 2:.2f},{c.thickness / 2:.2f},"
                     f"{c.sin_angle:.2f}")
    _write_text(path, "\n".join(lines) + "\n")


def _cell_segments(corners, values, center_value):
    """Zero-contour segments inside one grid cell.

    corners/values run counterclockwise from the bottom-left corner.  A
    point is material when its value is >= 0.  The two ambiguous saddle
    sign patterns are split according to the field value at the cell
    center.
    """
    inside = [v >= 0.0 for v in values]
    case = sum(1 << k for k, flag in enumerate(inside) if flag)
    if case in (0, 15):
        return []

    def edge_point(a, b):
        va, vb = values[a], values[b]
        t = va / (va - vb)
        pa, pb = corners[a], corners[b]
        return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))

    bottom, right, top, left = ((0, 1), (1, 2), (2, 3), (3, 0))
    crossings = {"bottom": bottom, "right": right, "top": top, "left": left}
    pts = {name: edge_point(*pair) for name, pair in crossings.items()
           if inside[pair[0]] != inside[pair[1]]}

    pairings = {
        1: [("left", "bottom")], 2: [("bottom", "right")],
        3: [("left", "right")], 4: [("right", "top")],
        6: [("bottom", "top")], 7: [("left", "top")],
        8: [("top", "left")], 9: [("top", "bottom")],
        11: [("top", "right")], 12: [("right", "left")],
        13: [("right", "bottom")], 14: [("bottom", "left")],
    }
    if case in (5, 10):
        # saddle: connect the crossings so the center joins its own phase
        if center_value >= 0.0:
            pair = ([("left", "top"), ("right", "bottom")] if case == 5
                    else [("bottom", "left"), ("top", "right")])
        else:
            pair = ([("left", "bottom"), ("right", "top")] if case == 5
                    else [("bottom", "right"), ("top", "left")])
        return [(pts[a], pts[b]) for a, b in pair]
    return [(pts[a], pts[b]) for a, b in pairings[case]]


def _chain_loops(segments):
    """Join segments into closed loops by matching endpoints."""

    def key(p):
        return (round(p[0], 9), round(p[1], 9))

    by_end: dict = {}
    for idx, (a, b) in enumerate(segments):
        if key(a) == key(b):
            continue
        by_end.setdefault(key(a), []).append(idx)
        by_end.setdefault(key(b), []).append(idx)

    used = [False] * len(segments)
    loops = []
    for start in range(len(segments)):
        if used[start] or key(segments[start][0]) == key(segments[start][1]):
            continue
        used[start] = True
        a, b = segments[start]
        loop = [a, b]
        while key(loop[-1]) != key(loop[0]):
            candidates = [i for i in by_end.get(key(loop[-1]), ())
                          if not used[i]]
            if not candidates:
                break              # open chain; keep what we have
            nxt = candidates[0]
            used[nxt] = True
            na, nb = segments[nxt]
            loop.append(nb if key(na) == key(loop[-1]) else na)
        if len(loop) > 2 and key(loop[-1]) == key(loop[0]):
            loop.pop()
        loops.append(loop)
    return loops


def extract_contours(comps: Sequence[Component], mesh: Mesh,
                     reg: Regularization):
    """Closed zero-level-set loops of the structure TDF on the node grid.

    The grid is padded with one ring of ghost nodes held at -1 so every
    contour closes even when material touches the domain boundary; loops
    are therefore clipped to the domain by the SVG writer.
    """
    if not comps:
        return []
    nxn, nyn = mesh.nx + 1, mesh.ny + 1
    phi = structure_tdf(comps, mesh.node_coords,
                        exponent=reg.exponent).phi_structure
    grid = np.full((nyn + 2, nxn + 2), -1.0)
    grid[1:-1, 1:-1] = phi.reshape(nyn, nxn)
    xs = np.concatenate([[-mesh.h], np.arange(nxn) * mesh.h,
                         [mesh.width + mesh.h]])
    ys = np.concatenate([[-mesh.h], np.arange(nyn) * mesh.h,
                         [mesh.height + mesh.h]])

    segments = []
    centers_x = 0.5 * (xs[:-1] + xs[1:])
    centers_y = 0.5 * (ys[:-1] + ys[1:])
    # saddle disambiguation needs true field samples at ambiguous cell
    # centers; collect those cells first, then evaluate in one batch
    pending = []
    for j in range(grid.shape[0] - 1):
        for i in range(grid.shape[1] - 1):
            vals = (grid[j, i], grid[j, i + 1],
                    grid[j + 1, i + 1], grid[j + 1, i])
            inside = [v >= 0 for v in vals]
            case = sum(1 << k for k, f in enumerate(inside) if f)
            if case in (5, 10):
                pending.append((j, i))
    center_vals = {}
    if pending:
        points = np.array([[centers_x[i], centers_y[j]] for j, i in pending])
        sampled = structure_tdf(comps, points,
                                exponent=reg.exponent).phi_structure
        sampled = np.atleast_1d(sampled)
        center_vals = {ji: float(v) for ji, v in zip(pending, sampled)}

    for j in range(grid.shape[0] - 1):
        for i in range(grid.shape[1] - 1):
            corners = ((xs[i], ys[j]), (xs[i + 1], ys[j]),
                       (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1]))
            vals = (grid[j, i], grid[j, i + 1],
                    grid[j + 1, i + 1], grid[j + 1, i])
            segments.extend(_cell_segments(corners, vals,
                                           center_vals.get((j, i), -1.0)))
    return _chain_loops(segments)


def _svg_canvas(width: float, height: float, body: str) -> str:
    px_w = int(round(width * _SVG_SCALE))
    px_h = int(round(height * _SVG_SCALE))
    stroke = 0.004 * max(width, height)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {width:g} {height:g}" '
        f'width="{px_w}" height="{px_h}">\n'
        f'<defs><clipPath id="domain">'
        f'<rect x="0" y="0" width="{width:g}" height="{height:g}"/>'
        f'</clipPath></defs>\n'
        f'<rect x="0" y="0" width="{width:g}" height="{height:g}" '
        f'fill="#ffffff" stroke="none"/>\n'
        f'{body}'
        f'<rect x="0" y="0" width="{width:g}" height="{height:g}" '
        f'fill="none" stroke="{_OUTLINE}" stroke-width="{stroke:g}"/>\n'
        f'</svg>\n'
    )


def export_contour_svg(comps: Sequence[Component], mesh: Mesh,
                       reg: Regularization, path: str) -> None:
    """Filled zero-level-set plot of the structure on the analysis mesh."""
    loops = extract_contours(comps, mesh, reg)
    w, h = mesh.width, mesh.height
    parts = []
    for loop in loops:
        coords = " L ".join(f"{x:.6f} {h - y:.6f}" for x, y in loop)
        parts.append(f"M {coords} Z")
    body = ""
    if parts:
        body = (f'<g clip-path="url(#domain)">'
                f'<path d="{" ".join(parts)}" fill="{_FILL}" '
                f'fill-rule="evenodd" stroke="none"/></g>\n')
    _write_text(path, _svg_canvas(w, h, body))


def component_corners(comp: Component) -> np.ndarray:
    """Global coordinates of the rectangle's corners, counterclockwise."""
    a, b = comp.length / 2.0, comp.thickness / 2.0
    q, p = comp.cos_angle, comp.sin_angle
    local = np.array([[a, b], [-a, b], [-a, -b], [a, -b]])
    rot = np.array([[q, -p], [p, q]])
    return np.array([comp.center_x, comp.center_y]) + local @ rot.T


def export_cad_svg(comps: Sequence[Component], path: str,
                   threshold_t: float = 0.0,
                   domain: tuple[float, float] | None = None) -> None:
    """Each component drawn as its exact rotated rectangle.

    Components thinner than threshold_t are dropped; the default keeps all
    of them.  domain fixes the canvas; without it the canvas hugs the
    drawn rectangles.
    """
    kept = [c for c in comps if c.thickness >= threshold_t]
    if domain is not None:
        w, h = domain
        offset = np.zeros(2)
    else:
        if not kept:
            raise ValueError("no components to draw and no domain given")
        pts = np.vstack([component_corners(c) for c in kept])
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        pad = 0.05 * max(hi[0] - lo[0], hi[1] - lo[1], 1e-9)
        offset = lo - pad
        w, h = (hi - lo) + 2 * pad
    polys = []
    for c in kept:
        corners = component_corners(c) - offset
        points = " ".join(f"{x:.6f},{h - y:.6f}" for x, y in corners)
        polys.append(f'<polygon points="{points}" fill="{_FILL}" '
                     f'stroke="none"/>')
    body = ""
    if polys:
        body = (f'<g clip-path="url(#domain)">' + "".join(polys) + "</g>\n")
    _write_text(path, _svg_canvas(w, h, body))
