"""Layout data model and geometric primitives.

Coordinates are normalized fractions of the canvas with the origin at the
top-left corner. Boxes may extend beyond [0,1] on unvalidated layouts:
overflow is a measurable defect, not a construction error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

# Normalized-area slack below which two boxes count as touching, not
# overlapping. Edge-sharing boxes must never register as a defect.
OVERLAP_EPSILON = 1e-6

# Default normalized distance within which two edges count as "nearly
# aligned" (and are snap candidates during refinement).
SNAP_TOLERANCE = 0.01


class LayoutError(Exception):
    """Base class for layout-domain errors."""


class InvalidGeometryError(LayoutError):
    """A box with non-positive width or height was used in a geometric op."""


class EmptyLayoutError(LayoutError):
    """An operation requiring at least one element got an empty layout."""


class ElementKind(str, Enum):
    TEXT = "text"
    IMAGE = "image"
    SHAPE = "shape"
    OTHER = "other"


class LayoutSource(str, Enum):
    ORIGINAL = "original"
    GENERATED = "generated"
    PERTURBED = "perturbed"
    REFINED = "refined"


class VariantKind(str, Enum):
    ORIGINAL_RATIO = "original_ratio"
    STRETCHING_2X = "stretching_2x"
    INVERSE_RATIO = "inverse_ratio"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: left edge x, top edge y, width w, height h."""

    x: float
    y: float
    w: float
    h: float

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    def translated(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x + dx, self.y + dy, self.w, self.h)


@dataclass(frozen=True)
class Canvas:
    width_px: int
    height_px: int

    def __post_init__(self) -> None:
        if self.width_px < 1 or self.height_px < 1:
            raise InvalidGeometryError(
                f"canvas must be at least 1x1 px, got {self.width_px}x{self.height_px}"
            )

    @property
    def aspect(self) -> float:
        return self.width_px / self.height_px

    @property
    def log2_aspect(self) -> float:
        return math.log2(self.aspect)


@dataclass(frozen=True)
class Element:
    id: str
    kind: ElementKind
    bbox: BBox
    z: int = 0
    label: str = ""


@dataclass(frozen=True)
class Layout:
    """A canvas plus positioned elements; the unit of the whole pipeline."""

    layout_id: str
    canvas: Canvas
    elements: tuple[Element, ...]
    source: LayoutSource = LayoutSource.ORIGINAL
    variant: VariantKind = VariantKind.ORIGINAL_RATIO
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.elements, tuple):
            object.__setattr__(self, "elements", tuple(self.elements))
        ids = [e.id for e in self.elements]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise LayoutError(f"duplicate element ids in layout {self.layout_id!r}: {dupes}")

    @property
    def element_ids(self) -> frozenset[str]:
        return frozenset(e.id for e in self.elements)

    def element(self, element_id: str) -> Element:
        for e in self.elements:
            if e.id == element_id:
                return e
        raise KeyError(element_id)

    def with_boxes(self, boxes: dict[str, BBox], source: LayoutSource | None = None) -> "Layout":
        """Copy of this layout with some element boxes replaced."""
        new_elements = tuple(
            replace(e, bbox=boxes[e.id]) if e.id in boxes else e for e in self.elements
        )
        return replace(self, elements=new_elements, source=source or self.source)


@dataclass(frozen=True)
class ValidationReport:
    overflow_area: float
    overlap_area: float
    misaligned_pairs: int
    is_clean: bool


def _require_positive(b: BBox) -> None:
    if b.w <= 0 or b.h <= 0:
        raise InvalidGeometryError(f"degenerate box w={b.w}, h={b.h}")


def intersection_area(a: BBox, b: BBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    # x2 = x + w re-derivation can exceed w by an ulp; the intersection can
    # never exceed either box.
    return min(iw * ih, a.area, b.area)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two positive-area boxes, in [0,1]."""
    _require_positive(a)
    _require_positive(b)
    if a == b:
        return 1.0
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    return inter / union


def rect_gap(a: BBox, b: BBox) -> float:
    """Minimum edge distance between two boxes; negative if they overlap.

    Separated on both axes -> Euclidean corner distance; on one axis ->
    that axis gap; overlapping -> minus the smaller penetration depth.
    """
    sep_x = max(a.x, b.x) - min(a.x2, b.x2)
    sep_y = max(a.y, b.y) - min(a.y2, b.y2)
    if sep_x > 0 and sep_y > 0:
        return math.hypot(sep_x, sep_y)
    if sep_x > 0:
        return sep_x
    if sep_y > 0:
        return sep_y
    return max(sep_x, sep_y)


def overflow_area(b: BBox) -> float:
    """Normalized area of the box lying outside the unit canvas."""
    _require_positive(b)
    if b.x >= 0.0 and b.y >= 0.0 and b.x2 <= 1.0 and b.y2 <= 1.0:
        return 0.0
    inside_w = max(0.0, min(b.x2, 1.0) - max(b.x, 0.0))
    inside_h = max(0.0, min(b.y2, 1.0) - max(b.y, 0.0))
    return max(0.0, b.area - inside_w * inside_h)


def total_overlap(layout: Layout) -> float:
    """Sum of pairwise intersection areas over unordered element pairs."""
    boxes = [e.bbox for e in layout.elements]
    for b in boxes:
        _require_positive(b)
    total = 0.0
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            total += intersection_area(boxes[i], boxes[j])
    return total


def total_overflow(layout: Layout) -> float:
    return sum(overflow_area(e.bbox) for e in layout.elements)


_GUIDES = ("x", "x2", "cx", "y", "y2", "cy")


def count_misaligned_pairs(layout: Layout, snap_tolerance: float = SNAP_TOLERANCE) -> int:
    """(pair, guide) combinations that are nearly but not exactly aligned."""
    count = 0
    els = layout.elements
    for i in range(len(els)):
        for j in range(i + 1, len(els)):
            a, b = els[i].bbox, els[j].bbox
            for guide in _GUIDES:
                d = abs(getattr(a, guide) - getattr(b, guide))
                if 0.0 < d < snap_tolerance:
                    count += 1
    return count


def validate_layout(
    layout: Layout,
    overlap_epsilon: float = OVERLAP_EPSILON,
    snap_tolerance: float = SNAP_TOLERANCE,
) -> ValidationReport:
    """Measure overflow, overlap, and near-misalignments of a layout."""
    if not layout.elements:
        raise EmptyLayoutError(f"layout {layout.layout_id!r} has no elements")
    overflow = total_overflow(layout)
    overlap = total_overlap(layout)
    misaligned = count_misaligned_pairs(layout, snap_tolerance)
    clean = overflow == 0.0 and overlap <= overlap_epsilon
    return ValidationReport(
        overflow_area=overflow,
        overlap_area=overlap,
        misaligned_pairs=misaligned,
        is_clean=clean,
    )


def union_area(boxes: list[BBox]) -> float:
    """Exact union area of axis-aligned boxes via coordinate compression."""
    rects = [(b.x, b.y, b.x2, b.y2) for b in boxes if b.w > 0 and b.h > 0]
    if not rects:
        return 0.0
    xs = sorted({v for r in rects for v in (r[0], r[2])})
    ys = sorted({v for r in rects for v in (r[1], r[3])})
    area = 0.0
    for xi in range(len(xs) - 1):
        for yi in range(len(ys) - 1):
            cx = (xs[xi] + xs[xi + 1]) / 2.0
            cy = (ys[yi] + ys[yi + 1]) / 2.0
            if any(r[0] <= cx <= r[2] and r[1] <= cy <= r[3] for r in rects):
                area += (xs[xi + 1] - xs[xi]) * (ys[yi + 1] - ys[yi])
    return area


# --- JSON schema -----------------------------------------------------------
#
# One object per layout:
# {layout_id, canvas:{width_px,height_px}, variant, source,
#  elements:[{id,kind,bbox:{x,y,w,h},z,label}]}
# Floats serialize via repr, which round-trips exactly.

_LAYOUT_KEYS = {"layout_id", "canvas", "variant", "source", "elements"}
_ELEMENT_KEYS = {"id", "kind", "bbox", "z", "label"}


class SchemaError(LayoutError):
    """A layout dict does not conform to the layout JSON schema."""


def layout_to_dict(layout: Layout) -> dict:
    d = {
        "layout_id": layout.layout_id,
        "canvas": {"width_px": layout.canvas.width_px, "height_px": layout.canvas.height_px},
        "variant": layout.variant.value,
        "source": layout.source.value,
        "elements": [
            {
                "id": e.id,
                "kind": e.kind.value,
                "bbox": {"x": e.bbox.x, "y": e.bbox.y, "w": e.bbox.w, "h": e.bbox.h},
                "z": e.z,
                "label": e.label,
            }
            for e in layout.elements
        ],
    }
    d.update(layout.extra)
    return d


def layout_from_dict(d: dict) -> Layout:
    try:
        canvas = Canvas(int(d["canvas"]["width_px"]), int(d["canvas"]["height_px"]))
        elements = tuple(
            Element(
                id=str(el["id"]),
                kind=ElementKind(el["kind"]),
                bbox=BBox(
                    float(el["bbox"]["x"]),
                    float(el["bbox"]["y"]),
                    float(el["bbox"]["w"]),
                    float(el["bbox"]["h"]),
                ),
                z=int(el.get("z", 0)),
                label=str(el.get("label", "")),
            )
            for el in d["elements"]
        )
        extra = {k: v for k, v in d.items() if k not in _LAYOUT_KEYS}
        return Layout(
            layout_id=str(d["layout_id"]),
            canvas=canvas,
            elements=elements,
            source=LayoutSource(d.get("source", "original")),
            variant=VariantKind(d.get("variant", "original_ratio")),
            extra=extra,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed layout object: {exc!r}") from exc
