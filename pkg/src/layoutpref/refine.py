"""Deterministic layout refinement: clamp overflow, push overlapping pairs
apart, snap near-alignments. Plus a remote-refiner client with local
fallback and the human-preference-ratio metric for refinement studies."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Protocol, Sequence

from .core import (
    OVERLAP_EPSILON,
    BBox,
    Layout,
    LayoutSource,
    SchemaError,
    intersection_area,
    layout_from_dict,
)
from .pairs import PreferenceLabel


class RefineError(Exception):
    pass


@dataclass(frozen=True)
class RefineConfig:
    snap_tolerance: float = 0.01
    max_iterations: int = 200
    step_damping: float = 0.5
    preserve_scale: bool = True

    def __post_init__(self) -> None:
        if self.snap_tolerance < 0:
            raise RefineError("snap_tolerance must be >= 0")
        if self.max_iterations < 1:
            raise RefineError("max_iterations must be >= 1")
        if not 0 < self.step_damping <= 1:
            raise RefineError("step_damping must be in (0, 1]")


@dataclass(frozen=True)
class RefineResult:
    layout: Layout
    converged: bool
    iterations: int
    overlap_history: tuple[float, ...]
    displacement: dict[str, float]


def _clamp_axis(pos: float, size: float) -> float:
    if pos >= 0.0 and pos + size <= 1.0:
        return pos
    if size >= 1.0:
        return (1.0 - size) / 2.0
    if pos < 0.0:
        return 0.0
    # flush to the far edge; walk down an ulp if 1-size re-adds past 1
    pos = 1.0 - size
    while pos + size > 1.0:
        pos = math.nextafter(pos, -math.inf)
    return pos


def _clamp_box(box: BBox, preserve_scale: bool) -> BBox:
    w, h = box.w, box.h
    if not preserve_scale:
        w, h = min(w, 1.0), min(h, 1.0)
    return BBox(_clamp_axis(box.x, w), _clamp_axis(box.y, h), w, h)


def _total_overlap(boxes: Sequence[BBox]) -> float:
    total = 0.0
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            total += intersection_area(boxes[i], boxes[j])
    return total


def _push_once(boxes: list[BBox], order: list[str], step: float) -> list[BBox]:
    """One push sweep: each overlapping pair, in index order, separates along
    its minimum-penetration axis, both sides clamped into the canvas.

    Pairs see positions updated by earlier pairs in the same sweep, which
    resolves chains of overlaps far faster than batched displacement.
    """
    def separate(i: int, j: int, horizontal: bool, pen: float) -> bool:
        a, b = boxes[i], boxes[j]
        move = pen / 2.0 * step
        if horizontal:
            sign = 1.0 if a.cx < b.cx or (a.cx == b.cx and order[i] < order[j]) else -1.0
            na = _clamp_box(a.translated(-sign * move, 0.0), preserve_scale=True)
            nb = _clamp_box(b.translated(sign * move, 0.0), preserve_scale=True)
        else:
            sign = 1.0 if a.cy < b.cy or (a.cy == b.cy and order[i] < order[j]) else -1.0
            na = _clamp_box(a.translated(0.0, -sign * move), preserve_scale=True)
            nb = _clamp_box(b.translated(0.0, sign * move), preserve_scale=True)
        if na == a and nb == b:
            return False  # both wall-pinned on this axis
        boxes[i], boxes[j] = na, nb
        return True

    boxes = list(boxes)
    n = len(boxes)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = boxes[i], boxes[j]
            pen_x = min(a.x2, b.x2) - max(a.x, b.x)
            pen_y = min(a.y2, b.y2) - max(a.y, b.y)
            if pen_x <= 0 or pen_y <= 0:
                continue
            if pen_x <= pen_y:
                separate(i, j, True, pen_x) or separate(i, j, False, pen_y)
            else:
                separate(i, j, False, pen_y) or separate(i, j, True, pen_x)
    return boxes


def _axis_guides(boxes: Sequence[BBox], skip: int, horizontal: bool) -> list[float]:
    guides = [0.0, 0.5, 1.0]
    for k, other in enumerate(boxes):
        if k == skip:
            continue
        if horizontal:
            guides.extend((other.x, other.cx, other.x2))
        else:
            guides.extend((other.y, other.cy, other.y2))
    return guides


def _best_snap_delta(values: tuple[float, float, float], guides: list[float], tol: float) -> float:
    """Smallest nonzero translation <= tol aligning one edge/center to a guide."""
    best = 0.0
    best_abs = tol
    for v in values:
        for g in guides:
            d = g - v
            if d == 0.0:
                continue
            if abs(d) < best_abs or (abs(d) == best_abs and best == 0.0):
                best_abs = abs(d)
                best = d
    return best if best_abs <= tol else 0.0


def _pair_overlap_with_others(boxes: list[BBox], i: int) -> float:
    return sum(intersection_area(boxes[i], boxes[j]) for j in range(len(boxes)) if j != i)


_RELOCATION_GRID = 16


def _relocate_worst(boxes: list[BBox]) -> list[BBox] | None:
    """Move the most-overlapped box to the least-overlapped grid position.

    Escape hatch for configurations pairwise pushes cannot untangle; returns
    None unless the move strictly reduces that box's overlap, so total
    overlap stays monotone.
    """
    overlaps = [_pair_overlap_with_others(boxes, i) for i in range(len(boxes))]
    worst = max(range(len(boxes)), key=lambda i: (overlaps[i], -i))
    if overlaps[worst] <= 0.0:
        return None
    box = boxes[worst]
    if box.w > 1.0 or box.h > 1.0:
        return None
    best_pos: BBox | None = None
    best_overlap = overlaps[worst] - 1e-12
    for gx in range(_RELOCATION_GRID + 1):
        for gy in range(_RELOCATION_GRID + 1):
            candidate = _clamp_box(
                BBox(
                    gx / _RELOCATION_GRID * (1.0 - box.w),
                    gy / _RELOCATION_GRID * (1.0 - box.h),
                    box.w,
                    box.h,
                ),
                preserve_scale=True,
            )
            overlap = sum(
                intersection_area(candidate, boxes[j])
                for j in range(len(boxes))
                if j != worst
            )
            if overlap < best_overlap:
                best_overlap = overlap
                best_pos = candidate
    if best_pos is None:
        return None
    out = list(boxes)
    out[worst] = best_pos
    return out


def _snap_pass(boxes: list[BBox], tol: float) -> list[BBox]:
    """Snap each box toward nearby peer/canvas guides when that does not
    increase its pairwise overlap or leave the canvas."""
    boxes = list(boxes)
    for i in range(len(boxes)):
        box = boxes[i]
        before = _pair_overlap_with_others(boxes, i)
        ddx = _best_snap_delta((box.x, box.cx, box.x2), _axis_guides(boxes, i, True), tol)
        ddy = _best_snap_delta((box.y, box.cy, box.y2), _axis_guides(boxes, i, False), tol)
        if ddx == 0.0 and ddy == 0.0:
            continue
        moved = box.translated(ddx, ddy)
        if moved.x < 0.0 or moved.x2 > 1.0 or moved.y < 0.0 or moved.y2 > 1.0:
            continue
        boxes[i] = moved
        if _pair_overlap_with_others(boxes, i) > before + 1e-15:
            boxes[i] = box
    return boxes


def refine_layout(layout: Layout, cfg: RefineConfig | None = None) -> RefineResult:
    """Iteratively clamp, push apart, and snap until the layout is clean.

    Total overlap never increases between iterations: a push step that
    would regress is retried at half strength and skipped if still
    regressive, and snap moves are accepted only when overlap-safe.
    Non-convergence returns the best iterate with converged=False.
    """
    cfg = cfg or RefineConfig()
    if not layout.elements:
        raise RefineError("cannot refine an empty layout")
    order = [e.id for e in layout.elements]
    boxes = [_clamp_box(e.bbox, cfg.preserve_scale) for e in layout.elements]
    displacement = {eid: 0.0 for eid in order}

    def track(old: list[BBox], new: list[BBox]) -> None:
        for eid, ob, nb in zip(order, old, new):
            displacement[eid] += math.hypot(nb.x - ob.x, nb.y - ob.y)

    track([e.bbox for e in layout.elements], boxes)
    history = [_total_overlap(boxes)]
    iterations = 0

    while history[-1] > OVERLAP_EPSILON and iterations < cfg.max_iterations:
        iterations += 1
        step = cfg.step_damping
        pushed = _push_once(boxes, order, step)
        while _total_overlap(pushed) > history[-1] + 1e-15 and step > cfg.step_damping / 16:
            step /= 2.0
            pushed = _push_once(boxes, order, step)
        if _total_overlap(pushed) > history[-1] + 1e-15:
            pushed = boxes
        snapped = _snap_pass(pushed, cfg.snap_tolerance)
        new_overlap = _total_overlap(snapped)
        if new_overlap > OVERLAP_EPSILON and new_overlap > 0.9 * history[-1]:
            # pushes are barely progressing; relocate the worst offender
            relocated = _relocate_worst(snapped)
            if relocated is not None:
                snapped = relocated
                new_overlap = _total_overlap(snapped)
        track(boxes, snapped)
        stalled = snapped == boxes
        boxes = snapped
        history.append(new_overlap)
        if stalled:
            break

    refined = layout.with_boxes(dict(zip(order, boxes)), source=LayoutSource.REFINED)
    return RefineResult(
        layout=refined,
        converged=history[-1] <= OVERLAP_EPSILON,
        iterations=iterations,
        overlap_history=tuple(history),
        displacement=displacement,
    )


class RefinerClient(Protocol):
    def refine(self, layout: Layout) -> dict: ...


@dataclass(frozen=True)
class RemoteRefineResult:
    layout: Layout
    used_fallback: bool
    log: tuple[str, ...]


def refine_remote(
    layout: Layout, client: RefinerClient, cfg: RefineConfig | None = None
) -> RemoteRefineResult:
    """Adopt a remote refiner's output when schema-valid and id-complete;
    otherwise fall back to the local optimizer with a log entry. Remote
    output is adopted as-is and not re-judged here."""
    log: list[str] = []
    try:
        remote = layout_from_dict(client.refine(layout))
    except SchemaError as exc:
        log.append(f"remote refiner returned malformed layout: {exc}")
        remote = None
    if remote is not None and remote.element_ids != layout.element_ids:
        log.append(
            "remote refiner changed the element set "
            f"(missing {sorted(layout.element_ids - remote.element_ids)})"
        )
        remote = None
    if remote is None:
        local = refine_layout(layout, cfg)
        log.append("fell back to the local refiner")
        return RemoteRefineResult(layout=local.layout, used_fallback=True, log=tuple(log))
    return RemoteRefineResult(
        layout=replace(remote, source=LayoutSource.REFINED),
        used_fallback=False,
        log=tuple(log),
    )


@dataclass(frozen=True)
class HprRecord:
    """One human comparison between an original and its refined version."""

    refined_side: PreferenceLabel
    preferred_side: PreferenceLabel

    def __post_init__(self) -> None:
        if not (self.refined_side.is_directional and self.preferred_side.is_directional):
            raise RefineError("hpr records must mark sides as left or right (ties excluded)")


def hpr(records: Sequence[HprRecord]) -> float:
    """Human preference ratio: refined-preferred count over original-preferred.

    Returns inf when the original is never preferred (refined always wins).
    """
    if not records:
        raise RefineError("no hpr records")
    refined = sum(1 for r in records if r.preferred_side == r.refined_side)
    original = len(records) - refined
    if original == 0:
        return math.inf
    return refined / original
