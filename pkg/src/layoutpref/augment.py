"""Aspect-ratio variants, seeded perturbation augmentation, negative-pair
construction, and the generator-client intake."""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum
from typing import Protocol

from .core import (
    BBox,
    Canvas,
    Layout,
    LayoutSource,
    SchemaError,
    VariantKind,
    layout_from_dict,
)
from .pairs import PairProvenance, PreferenceLabel, PreferencePair


class AugmentError(Exception):
    pass


def apply_variant(canvas: Canvas, kind: VariantKind) -> Canvas:
    """Re-canvas under one of the three aspect-ratio settings.

    stretching_2x doubles the longest side (square canvases double the
    height); inverse_ratio swaps the sides.
    """
    if kind is VariantKind.ORIGINAL_RATIO:
        return canvas
    if kind is VariantKind.STRETCHING_2X:
        if canvas.width_px > canvas.height_px:
            return Canvas(canvas.width_px * 2, canvas.height_px)
        return Canvas(canvas.width_px, canvas.height_px * 2)
    if kind is VariantKind.INVERSE_RATIO:
        return Canvas(canvas.height_px, canvas.width_px)
    raise AugmentError(f"unknown variant kind {kind!r}")


@dataclass(frozen=True)
class PerturbationConfig:
    element_fraction: float = 0.7
    offset_min_frac: float = 0.2
    offset_max_frac: float = 0.5
    scale_min: float = 0.8
    scale_max: float = 1.2
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.element_fraction <= 1:
            raise AugmentError(f"element_fraction must be in (0,1], got {self.element_fraction}")
        if not 0 <= self.offset_min_frac < self.offset_max_frac:
            raise AugmentError("offset range must satisfy 0 <= min < max")
        if not 0 < self.scale_min < self.scale_max:
            raise AugmentError("scale range must satisfy 0 < min < max")


def _round_half_up(x: float) -> int:
    import math

    return int(math.floor(x + 0.5))


def perturb_layout(layout: Layout, cfg: PerturbationConfig) -> Layout:
    """Degrade a layout by perturbing a seeded random subset of elements.

    Selects round(element_fraction * n) elements (at least 1) without
    replacement; each gets exactly one perturbation, either a position
    offset of 20-50% of its own size per axis or a width/height scale in
    [0.8, 1.2] anchored at its center. Deterministic for a fixed seed.
    """
    if not layout.elements:
        raise AugmentError("cannot perturb an empty layout")
    rng = random.Random(cfg.seed)
    n = len(layout.elements)
    k = max(1, _round_half_up(cfg.element_fraction * n))
    selected = set(rng.sample(range(n), k))

    new_boxes: dict[str, BBox] = {}
    for i, element in enumerate(layout.elements):
        if i not in selected:
            continue
        box = element.bbox
        if rng.random() < 0.5:
            # Position offset: per-axis shift relative to the element's own size.
            dx = rng.uniform(cfg.offset_min_frac, cfg.offset_max_frac) * box.w
            if rng.random() < 0.5:
                dx = -dx
            dy = rng.uniform(cfg.offset_min_frac, cfg.offset_max_frac) * box.h
            if rng.random() < 0.5:
                dy = -dy
            new_boxes[element.id] = box.translated(dx, dy)
        else:
            # Scale one axis about the element center.
            factor = rng.uniform(cfg.scale_min, cfg.scale_max)
            if rng.random() < 0.5:
                new_w = box.w * factor
                new_boxes[element.id] = BBox(box.cx - new_w / 2.0, box.y, new_w, box.h)
            else:
                new_h = box.h * factor
                new_boxes[element.id] = BBox(box.x, box.cy - new_h / 2.0, box.w, new_h)

    perturbed = layout.with_boxes(new_boxes, source=LayoutSource.PERTURBED)
    return replace(perturbed, layout_id=f"{layout.layout_id}__p{cfg.seed}")


class NegativePairMode(str, Enum):
    ORIGINAL_VS_PERTURBED = "original_vs_perturbed"
    BOTH_PERTURBED = "both_perturbed"


def make_negative_pairs(
    originals: list[Layout],
    cfg: PerturbationConfig,
    mode: NegativePairMode = NegativePairMode.ORIGINAL_VS_PERTURBED,
) -> list[PreferencePair]:
    """Auto-labeled negative pairs from perturbed copies of ground truth.

    original_vs_perturbed pairs each original against one perturbed copy,
    labeled to prefer the original with the side randomized per seed;
    both_perturbed pairs two distinct perturbations, labeled both_bad.
    """
    master = random.Random(cfg.seed)
    pairs: list[PreferencePair] = []
    for original in originals:
        if mode is NegativePairMode.ORIGINAL_VS_PERTURBED:
            sub_seed = master.getrandbits(63)
            perturbed = perturb_layout(original, replace(cfg, seed=sub_seed))
            original_on_left = master.random() < 0.5
            left, right = (original, perturbed) if original_on_left else (perturbed, original)
            gold = PreferenceLabel.LEFT if original_on_left else PreferenceLabel.RIGHT
        else:
            seed_a = master.getrandbits(63)
            seed_b = master.getrandbits(63)
            left = perturb_layout(original, replace(cfg, seed=seed_a))
            right = perturb_layout(original, replace(cfg, seed=seed_b))
            gold = PreferenceLabel.BOTH_BAD
        pairs.append(
            PreferencePair(
                pair_id=f"neg__{original.layout_id}",
                left=left,
                right=right,
                gold_label=gold,
                provenance=PairProvenance.PERTURBATION,
                extra={"negative_mode": mode.value},
            )
        )
    return pairs


# --- Generator intake --------------------------------------------------------


@dataclass(frozen=True)
class GroupPayload:
    """One group as sent to the layout generator: composite region, joined
    label, and the member elements needed to reconstruct full layouts."""

    ids: tuple[str, ...]
    bbox: BBox
    label: str
    elements: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "ids": list(self.ids),
            "bbox": {"x": self.bbox.x, "y": self.bbox.y, "w": self.bbox.w, "h": self.bbox.h},
            "label": self.label,
            "elements": [dict(e) for e in self.elements],
        }


def group_payloads(layout: Layout, groups: list[list[str]]) -> list[GroupPayload]:
    payloads = []
    for group in groups:
        members = [layout.element(eid) for eid in sorted(group)]
        x1 = min(e.bbox.x for e in members)
        y1 = min(e.bbox.y for e in members)
        x2 = max(e.bbox.x2 for e in members)
        y2 = max(e.bbox.y2 for e in members)
        payloads.append(
            GroupPayload(
                ids=tuple(e.id for e in members),
                bbox=BBox(x1, y1, x2 - x1, y2 - y1),
                label=" / ".join(e.label for e in members if e.label),
                elements=tuple(
                    {
                        "id": e.id,
                        "kind": e.kind.value,
                        "bbox": {"x": e.bbox.x, "y": e.bbox.y, "w": e.bbox.w, "h": e.bbox.h},
                        "z": e.z,
                        "label": e.label,
                    }
                    for e in members
                ),
            )
        )
    return payloads


@dataclass(frozen=True)
class GeneratorRequest:
    groups: tuple[GroupPayload, ...]
    target_canvas: Canvas
    num_samples: int = 10
    temperature: float | None = None

    def __post_init__(self) -> None:
        if self.num_samples < 1:
            raise AugmentError(f"num_samples must be >= 1, got {self.num_samples}")
        if not self.groups:
            raise AugmentError("generator request needs at least one group")

    def to_dict(self) -> dict:
        return {
            "groups": [g.to_dict() for g in self.groups],
            "canvas": {
                "width_px": self.target_canvas.width_px,
                "height_px": self.target_canvas.height_px,
            },
            "num_samples": self.num_samples,
            "temperature": self.temperature,
        }

    @property
    def element_ids(self) -> frozenset[str]:
        return frozenset(eid for g in self.groups for eid in g.ids)


class GeneratorClient(Protocol):
    def generate(self, request: GeneratorRequest) -> list[dict]: ...


@dataclass(frozen=True)
class FetchResult:
    layouts: tuple[Layout, ...]
    dropped: int
    warnings: tuple[str, ...] = ()


def fetch_candidates(request: GeneratorRequest, client: GeneratorClient) -> FetchResult:
    """Request candidate layouts; drop schema-invalid responses with a count.

    Kept layouts are tagged source=generated. A layout whose element-id set
    does not match the request is treated as invalid.
    """
    raw_layouts = client.generate(request)
    expected_ids = request.element_ids
    kept: list[Layout] = []
    warnings: list[str] = []
    for i, raw in enumerate(raw_layouts):
        try:
            layout = layout_from_dict(raw)
        except SchemaError as exc:
            warnings.append(f"candidate {i}: {exc}")
            continue
        if layout.element_ids != expected_ids:
            warnings.append(
                f"candidate {i}: element ids do not match request "
                f"(missing {sorted(expected_ids - layout.element_ids)}, "
                f"extra {sorted(layout.element_ids - expected_ids)})"
            )
            continue
        kept.append(replace(layout, source=LayoutSource.GENERATED))
    return FetchResult(layouts=tuple(kept), dropped=len(warnings), warnings=tuple(warnings))
