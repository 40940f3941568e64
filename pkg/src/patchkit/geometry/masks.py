"""Per-layer SVG fabrication masks with alignment crosses."""
from __future__ import annotations

from pathlib import Path

from ..constants import MM
from .layout import MARK_ARM, AntennaGeometry, CopperLayer, DielectricLayer

STROKE_MM = 0.2
CANVAS_MARGIN = 6 * MM


def _mm(v: float) -> str:
    s = f"{v / MM:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def layer_svg(geometry: AntennaGeometry, layer: CopperLayer) -> str:
    b = geometry.board
    x0, y0 = b.x0 - CANVAS_MARGIN, b.y0 - CANVAS_MARGIN
    w, h = b.width + 2 * CANVAS_MARGIN, b.height + 2 * CANVAS_MARGIN
    y_top = y0 + h

    def px(x):  # board x -> svg
        return _mm(x - x0)

    def py(y):  # board y -> svg (y axis flipped)
        return _mm(y_top - y)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_mm(w)}mm" height="{_mm(h)}mm" '
        f'viewBox="0 0 {_mm(w)} {_mm(h)}">',
        f"<title>{layer.name} ({layer.role})</title>",
        f'<rect x="{px(b.x0)}" y="{py(b.y1)}" width="{_mm(b.width)}" height="{_mm(b.height)}" '
        f'fill="none" stroke="#808080" stroke-width="{STROKE_MM / 2}"/>',
        f'<g id="copper-{layer.name}" fill="#000000" stroke="none">',
    ]
    for r in layer.shape.rectangles():
        out.append(
            f'<path d="M{px(r.x0)} {py(r.y0)}H{px(r.x1)}V{py(r.y1)}H{px(r.x0)}Z"/>'
        )
    out.append("</g>")
    out.append(f'<g id="alignment" stroke="#000000" stroke-width="{STROKE_MM}" fill="none">')
    a = MARK_ARM / 2
    for mx, my in geometry.alignment_marks:
        out.append(f'<line x1="{px(mx - a)}" y1="{py(my)}" x2="{px(mx + a)}" y2="{py(my)}"/>')
        out.append(f'<line x1="{px(mx)}" y1="{py(my - a)}" x2="{px(mx)}" y2="{py(my + a)}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export_masks(geometry: AntennaGeometry, directory) -> list[Path]:
    """Write one SVG per copper layer plus ``manifest.txt``; returns the paths written."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    written = []
    rows = ["layer, role, thickness_mm, file"]
    n_copper = 0
    for idx, lay in enumerate(geometry.stack.layers, start=1):
        if isinstance(lay, CopperLayer):
            n_copper += 1
            name = f"layer{n_copper}_{lay.name}.svg"
            path = d / name
            path.write_text(layer_svg(geometry, lay), encoding="utf-8", newline="\n")
            written.append(path)
            rows.append(f"{idx}, {lay.role}, 0.000, {name}")
        elif isinstance(lay, DielectricLayer):
            rows.append(f"{idx}, dielectric, {lay.thickness / MM:.3f}, -")
    manifest = d / "manifest.txt"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")
    written.append(manifest)
    return written
