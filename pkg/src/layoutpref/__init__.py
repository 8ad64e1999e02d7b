"""Toolkit for curating, judging, and evaluating layout preference data."""

from .core import (
    BBox,
    Canvas,
    Element,
    ElementKind,
    Layout,
    LayoutSource,
    ValidationReport,
    VariantKind,
    iou,
    total_overlap,
    validate_layout,
)
from .pairs import PairProvenance, PreferenceLabel, PreferencePair, Verdict

__all__ = [
    "BBox",
    "Canvas",
    "Element",
    "ElementKind",
    "Layout",
    "LayoutSource",
    "PairProvenance",
    "PreferenceLabel",
    "PreferencePair",
    "ValidationReport",
    "VariantKind",
    "Verdict",
    "iou",
    "total_overlap",
    "validate_layout",
]
