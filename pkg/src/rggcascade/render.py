"""Static SVG rendering of a node CSV (solid / hollow circles, light edges)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .rgg import RegionSpec, build_graph

STYLES = {
    # solid when the predicate holds
    "class": lambda cls, failed: cls == "HV",
    "weak": lambda cls, failed: cls == "HR",
    "failed": lambda cls, failed: not failed,
}

SCALE = 30.0
MARGIN = 20.0
NODE_R = 3.0


class NodeFileError(ValueError):
    def __init__(self, row: int, msg: str):
        super().__init__(f"row {row}: {msg}")
        self.row = row


@dataclass
class NodeTable:
    ids: np.ndarray
    coords: np.ndarray
    classes: list[str]
    failed: np.ndarray


def read_nodes(path) -> NodeTable:
    """Parse a node CSV (``id,x,y`` plus optional state/threshold/class/failed)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return NodeTable(np.empty(0, np.int64), np.empty((0, 2)), [], np.empty(0, bool))
        header = [h.strip() for h in header]
        if header[:3] != ["id", "x", "y"]:
            raise NodeFileError(1, f"header must start with id,x,y, got {','.join(header)}")
        col = {h: i for i, h in enumerate(header)}
        ids, xy, classes, failed = [], [], [], []
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise NodeFileError(rownum, f"expected {len(header)} fields, got {len(row)}")
            try:
                ids.append(int(row[0]))
                xy.append((float(row[1]), float(row[2])))
                if "failed" in col:
                    f = row[col["failed"]].strip()
                    if f not in ("0", "1"):
                        raise ValueError(f"failed must be 0 or 1, got {f!r}")
                    failed.append(f == "1")
                else:
                    failed.append(False)
            except ValueError as exc:
                raise NodeFileError(rownum, str(exc)) from None
            cls = row[col["class"]].strip() if "class" in col else ""
            if "class" in col and cls not in ("HV", "HR", "W"):
                raise NodeFileError(rownum, f"class must be HV, HR or W, got {cls!r}")
            classes.append(cls)
            if not all(math.isfinite(v) for v in xy[-1]):
                raise NodeFileError(rownum, "non-finite coordinate")
    return NodeTable(
        np.array(ids, dtype=np.int64),
        np.array(xy, dtype=float).reshape(-1, 2),
        classes,
        np.array(failed, dtype=bool),
    )


def _f(v: float) -> str:
    return f"{v:.2f}"


def render_svg(
    table: NodeTable,
    style: str = "class",
    radius: float = 1.0,
    box: tuple[float, float] | None = None,
    seed_node: int | None = None,
    draw_edges: bool = True,
) -> str:
    if style not in STYLES:
        raise ValueError(f"unknown style {style!r}; choose from {sorted(STYLES)}")
    solid = STYLES[style]
    if box is None:
        if len(table.coords):
            box = (max(1.0, math.ceil(table.coords[:, 0].max())), max(1.0, math.ceil(table.coords[:, 1].max())))
        else:
            box = (1.0, 1.0)
    w, h = box
    width = w * SCALE + 2 * MARGIN
    height = h * SCALE + 2 * MARGIN

    def px(x, y):
        # SVG y axis points down
        return MARGIN + x * SCALE, MARGIN + (h - y) * SCALE

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}">',
        "<defs>",
        '<marker id="arrowhead" markerWidth="10" markerHeight="7" refX="10" refY="3.5" orient="auto">',
        '<polygon points="0 0, 10 3.5, 0 7" fill="#d62728"/>',
        "</marker>",
        "</defs>",
        f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="white"/>',
        f'<rect x="{_f(MARGIN)}" y="{_f(MARGIN)}" width="{_f(w * SCALE)}" height="{_f(h * SCALE)}" '
        'fill="none" stroke="#999999" stroke-width="0.5"/>',
    ]
    n = len(table.coords)
    if draw_edges and n:
        region = RegionSpec(w, h)
        coords = np.clip(table.coords, 0.0, [w, h])
        graph = build_graph(coords, radius, region)
        out.append('<g stroke="#c8c8c8" stroke-width="0.6">')
        for i, j in graph.edges().tolist():
            x1, y1 = px(*coords[i])
            x2, y2 = px(*coords[j])
            out.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}"/>')
        out.append("</g>")
    out.append('<g stroke="black" stroke-width="0.8">')
    for i in range(n):
        cx, cy = px(*table.coords[i])
        fill = "black" if solid(table.classes[i], bool(table.failed[i])) else "white"
        out.append(f'<circle cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(NODE_R)}" fill="{fill}"/>')
    out.append("</g>")
    if seed_node is not None:
        hit = np.flatnonzero(table.ids == seed_node)
        if hit.size == 0:
            raise ValueError(f"seed node {seed_node} not in node file")
        cx, cy = px(*table.coords[hit[0]])
        out.append(
            f'<line x1="{_f(cx - 40)}" y1="{_f(cy - 40)}" x2="{_f(cx - NODE_R - 1)}" '
            f'y2="{_f(cy - NODE_R - 1)}" stroke="#d62728" stroke-width="2" marker-end="url(#arrowhead)"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
