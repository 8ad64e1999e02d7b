"""Deterministic SVG wireframe rendering of layouts and side-by-side pairs.

Pure functions of their inputs: fixed inputs give byte-identical output.
Pixel rectangles are normalized coords scaled to canvas pixels, rounded
half-up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

from .core import ElementKind, Layout
from .pairs import PreferencePair

DEFAULT_PALETTE: dict[ElementKind, str] = {
    ElementKind.TEXT: "#1f77b4",
    ElementKind.IMAGE: "#2ca02c",
    ElementKind.SHAPE: "#ff7f0e",
    ElementKind.OTHER: "#9467bd",
}


class RenderError(Exception):
    pass


@dataclass(frozen=True)
class RenderStyle:
    palette: dict[ElementKind, str] = field(default_factory=lambda: dict(DEFAULT_PALETTE))
    stroke_width: int = 2
    show_labels: bool = False
    show_scale_bar: bool = False

    def __post_init__(self) -> None:
        missing = [k.value for k in ElementKind if k not in self.palette]
        if missing:
            raise RenderError(f"palette must cover all element kinds, missing {missing}")


def _px(value: float, scale: int) -> int:
    return int(math.floor(value * scale + 0.5))


def _layout_body(layout: Layout, style: RenderStyle) -> list[str]:
    """Inner markup in native canvas pixels (no outer <svg> wrapper)."""
    w_px, h_px = layout.canvas.width_px, layout.canvas.height_px
    parts = [
        f'<rect x="0" y="0" width="{w_px}" height="{h_px}" fill="#ffffff" '
        f'stroke="#333333" stroke-width="{style.stroke_width}"/>'
    ]
    for element in sorted(layout.elements, key=lambda e: (e.z, e.id)):
        b = element.bbox
        x, y = _px(b.x, w_px), _px(b.y, h_px)
        w = _px(b.x2, w_px) - x
        h = _px(b.y2, h_px) - y
        color = style.palette[element.kind]
        parts.append(
            f'<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="{color}" '
            f'fill-opacity="0.6" stroke="{color}" stroke-width="{style.stroke_width}"/>'
        )
        if style.show_labels:
            text = element.id if not element.label else f"{element.id}: {element.label}"
            parts.append(
                f'<text x="{x + 4}" y="{y + 14}" font-family="monospace" '
                f'font-size="12" fill="#111111">{escape(text)}</text>'
            )
    if style.show_scale_bar:
        bar = max(1, w_px // 10)
        y_bar = h_px - 8
        parts.append(
            f'<line x1="8" y1="{y_bar}" x2="{8 + bar}" y2="{y_bar}" '
            f'stroke="#111111" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="8" y="{y_bar - 4}" font-family="monospace" font-size="10" '
            f'fill="#111111">{bar}px</text>'
        )
    return parts


def render_svg(layout: Layout, style: RenderStyle | None = None) -> str:
    """One kind-colored rectangle per element in z order, plus canvas frame."""
    style = style or RenderStyle()
    w_px, h_px = layout.canvas.width_px, layout.canvas.height_px
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w_px}" height="{h_px}" '
        f'viewBox="0 0 {w_px} {h_px}">'
    ]
    lines.extend(_layout_body(layout, style))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def rasterize_svg(svg: str, out_path, rasterizer_cmd: str) -> None:
    """Run an external SVG-to-PNG rasterizer (not bundled).

    rasterizer_cmd is a shell-free template with {svg} and {png}
    placeholders, e.g. "rsvg-convert {svg} -o {png}".
    """
    import subprocess
    import tempfile
    from pathlib import Path

    if "{svg}" not in rasterizer_cmd or "{png}" not in rasterizer_cmd:
        raise RenderError("rasterizer command must contain {svg} and {png} placeholders")
    with tempfile.NamedTemporaryFile("w", suffix=".svg", delete=False) as fh:
        fh.write(svg)
        svg_path = fh.name
    try:
        argv = [
            part.replace("{svg}", svg_path).replace("{png}", str(out_path))
            for part in rasterizer_cmd.split()
        ]
        result = subprocess.run(argv, capture_output=True, text=True)
        if result.returncode != 0:
            raise RenderError(f"rasterizer failed ({result.returncode}): {result.stderr[:200]}")
    finally:
        Path(svg_path).unlink(missing_ok=True)


CAPTION_BAND_PX = 28
GUTTER_PX = 24


def render_pair(
    pair: PreferencePair,
    style: RenderStyle | None = None,
    display_height: int = 480,
) -> str:
    """Side-by-side rendering: equal display heights, fixed gutter, A/B captions."""
    style = style or RenderStyle()
    left, right = pair.left, pair.right
    left_w = _px(left.canvas.width_px * display_height / left.canvas.height_px, 1)
    right_w = _px(right.canvas.width_px * display_height / right.canvas.height_px, 1)
    total_w = left_w + GUTTER_PX + right_w
    total_h = display_height + CAPTION_BAND_PX

    def embed(layout: Layout, x: int, width: int) -> list[str]:
        parts = [
            f'<svg x="{x}" y="{CAPTION_BAND_PX}" width="{width}" height="{display_height}" '
            f'viewBox="0 0 {layout.canvas.width_px} {layout.canvas.height_px}" '
            f'preserveAspectRatio="none">'
        ]
        parts.extend(_layout_body(layout, style))
        parts.append("</svg>")
        return parts

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{total_h}" '
        f'viewBox="0 0 {total_w} {total_h}">',
        f'<rect x="0" y="0" width="{total_w}" height="{total_h}" fill="#f5f5f5"/>',
        f'<text x="{left_w // 2}" y="20" font-family="monospace" font-size="16" '
        f'text-anchor="middle" fill="#111111">A</text>',
        f'<text x="{left_w + GUTTER_PX + right_w // 2}" y="20" font-family="monospace" '
        f'font-size="16" text-anchor="middle" fill="#111111">B</text>',
    ]
    lines.extend(embed(left, 0, left_w))
    lines.extend(embed(right, left_w + GUTTER_PX, right_w))
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
