from __future__ import annotations

import random

import pytest

from layoutpref.core import (
    BBox,
    Canvas,
    Element,
    ElementKind,
    Layout,
    LayoutSource,
    VariantKind,
)

KINDS = (ElementKind.TEXT, ElementKind.IMAGE, ElementKind.SHAPE, ElementKind.OTHER)


def make_layout(
    boxes,
    layout_id="L0",
    kinds=None,
    canvas=(1000, 1000),
    source=LayoutSource.ORIGINAL,
    variant=VariantKind.ORIGINAL_RATIO,
    labels=None,
):
    """Layout from a list of (x, y, w, h) tuples; ids e0, e1, ..."""
    elements = []
    for i, (x, y, w, h) in enumerate(boxes):
        kind = kinds[i] if kinds else KINDS[i % len(KINDS)]
        label = labels[i] if labels else ""
        elements.append(Element(id=f"e{i}", kind=kind, bbox=BBox(x, y, w, h), z=i, label=label))
    return Layout(
        layout_id=layout_id,
        canvas=Canvas(*canvas),
        elements=tuple(elements),
        source=source,
        variant=variant,
    )


def grid_layout(rows=2, cols=5, margin=0.05, gap=0.05, layout_id="grid", canvas=(1000, 1000)):
    """Clean, aligned grid of rows x cols cells; a well-scoring layout."""
    usable_w = 1.0 - 2 * margin - (cols - 1) * gap
    usable_h = 1.0 - 2 * margin - (rows - 1) * gap
    w = usable_w / cols
    h = usable_h / rows
    boxes = []
    for r in range(rows):
        for c in range(cols):
            boxes.append((margin + c * (w + gap), margin + r * (h + gap), w, h))
    return make_layout(boxes, layout_id=layout_id, canvas=canvas)


def random_clean_layout(rng: random.Random, n=5, layout_id="rand", canvas=(1000, 1000)):
    """n non-degenerate boxes fully inside the canvas (overlaps allowed)."""
    boxes = []
    for _ in range(n):
        w = rng.uniform(0.05, 0.4)
        h = rng.uniform(0.05, 0.4)
        x = rng.uniform(0.0, 1.0 - w)
        y = rng.uniform(0.0, 1.0 - h)
        boxes.append((x, y, w, h))
    return make_layout(boxes, layout_id=layout_id, canvas=canvas)


@pytest.fixture
def rng():
    return random.Random(20240817)
