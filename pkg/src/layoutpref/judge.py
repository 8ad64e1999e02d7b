"""4-class pairwise judging: a deterministic geometric judge, a remote
VLM-judge client, position debiasing, and the low-quality layout filter."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from .core import (
    OVERLAP_EPSILON,
    SNAP_TOLERANCE,
    Layout,
    rect_gap,
    total_overflow,
    total_overlap,
)
from .pairs import PreferenceLabel, PreferencePair, Verdict


class JudgeError(Exception):
    pass


class ProtocolError(JudgeError):
    """A remote judge answered outside the wire contract."""


@dataclass(frozen=True)
class JudgeWeights:
    """Weights of the five geometric sub-scores; must sum to 1."""

    non_overlap: float = 0.35
    in_bounds: float = 0.25
    alignment: float = 0.2
    balance: float = 0.1
    whitespace: float = 0.1

    def __post_init__(self) -> None:
        total = self.non_overlap + self.in_bounds + self.alignment + self.balance + self.whitespace
        if abs(total - 1.0) > 1e-9:
            raise JudgeError(f"judge weights must sum to 1, got {total}")


# Overlap area treated as fully saturating the non-overlap sub-score.
DEFAULT_OVERLAP_BUDGET = 0.05

_EDGE_GUIDES_X = ("x", "cx", "x2")
_EDGE_GUIDES_Y = ("y", "cy", "y2")


def _alignment_fraction(layout: Layout, tol: float) -> float:
    els = layout.elements
    if len(els) < 2:
        return 1.0
    aligned = 0
    pairs = 0
    for i in range(len(els)):
        for j in range(i + 1, len(els)):
            pairs += 1
            a, b = els[i].bbox, els[j].bbox
            hit = False
            for g in _EDGE_GUIDES_X:
                if abs(getattr(a, g) - getattr(b, g)) <= tol:
                    hit = True
                    break
            if not hit:
                for g in _EDGE_GUIDES_Y:
                    if abs(getattr(a, g) - getattr(b, g)) <= tol:
                        hit = True
                        break
            if hit:
                aligned += 1
    return aligned / pairs


def _balance(layout: Layout) -> float:
    total_area = sum(e.bbox.area for e in layout.elements)
    if total_area == 0:
        return 1.0
    com_x = sum(e.bbox.cx * e.bbox.area for e in layout.elements) / total_area
    com_y = sum(e.bbox.cy * e.bbox.area for e in layout.elements) / total_area
    offset = math.hypot(com_x - 0.5, com_y - 0.5)
    return 1.0 - min(1.0, offset / math.hypot(0.5, 0.5))


def _whitespace_regularity(layout: Layout) -> float:
    els = layout.elements
    if len(els) < 2:
        return 1.0
    gaps = []
    for i, e in enumerate(els):
        nearest = min(
            rect_gap(e.bbox, o.bbox) for j, o in enumerate(els) if j != i
        )
        gaps.append(max(0.0, nearest))
    mean = sum(gaps) / len(gaps)
    if mean == 0.0:
        return 1.0
    cv = statistics.pstdev(gaps) / mean
    return 1.0 - min(1.0, cv)


def heuristic_score(
    layout: Layout,
    weights: JudgeWeights | None = None,
    overlap_budget: float = DEFAULT_OVERLAP_BUDGET,
    snap_tolerance: float = SNAP_TOLERANCE,
) -> float:
    """Geometric quality score in [0,1]: weighted non-overlap, in-bounds,
    alignment, balance, and whitespace-regularity sub-scores."""
    w = weights or JudgeWeights()
    non_overlap = 1.0 - min(1.0, total_overlap(layout) / overlap_budget)
    in_bounds = 1.0 - min(1.0, total_overflow(layout) * 10.0)
    alignment = _alignment_fraction(layout, snap_tolerance)
    balance = _balance(layout)
    whitespace = _whitespace_regularity(layout)
    return (
        w.non_overlap * non_overlap
        + w.in_bounds * in_bounds
        + w.alignment * alignment
        + w.balance * balance
        + w.whitespace * whitespace
    )


def _defect_free(layout: Layout) -> bool:
    return total_overflow(layout) == 0.0 and total_overlap(layout) <= OVERLAP_EPSILON


def judge_pair_heuristic(
    pair: PreferencePair,
    good_threshold: float = 0.75,
    bad_threshold: float = 0.4,
    margin: float = 0.05,
    weights: JudgeWeights | None = None,
) -> Verdict:
    """Score both sides and emit a 4-class verdict.

    A defect-free side beats a side with any overlap or overflow regardless
    of margin; otherwise close high scores are both_good, low scores are
    both_bad, and the higher score wins. Swap-equivariant by construction.
    """
    left_score = heuristic_score(pair.left, weights)
    right_score = heuristic_score(pair.right, weights)

    left_clean = _defect_free(pair.left)
    right_clean = _defect_free(pair.right)
    if left_clean and not right_clean:
        label = PreferenceLabel.LEFT
    elif right_clean and not left_clean:
        label = PreferenceLabel.RIGHT
    elif (
        left_score >= good_threshold
        and right_score >= good_threshold
        and abs(left_score - right_score) < margin
    ):
        label = PreferenceLabel.BOTH_GOOD
    elif left_score < bad_threshold and right_score < bad_threshold:
        label = PreferenceLabel.BOTH_BAD
    elif left_score > right_score:
        label = PreferenceLabel.LEFT
    elif right_score > left_score:
        label = PreferenceLabel.RIGHT
    else:
        label = (
            PreferenceLabel.BOTH_GOOD
            if left_score >= good_threshold
            else PreferenceLabel.BOTH_BAD
        )
    return Verdict(label=label, left_score=left_score, right_score=right_score)


class JudgeEndpoint(Protocol):
    def judge(
        self, pair_id: str, left_render: str, right_render: str, left_meta: dict, right_meta: dict
    ) -> str: ...


_VALID_LABELS = {l.value for l in PreferenceLabel}


def judge_pair_remote(pair: PreferencePair, client: JudgeEndpoint) -> Verdict:
    """Send base64 side-by-side renders plus metadata; parse the 4-class answer."""
    import base64

    from .core import layout_to_dict
    from .render import render_svg

    left_render = base64.b64encode(render_svg(pair.left).encode("utf-8")).decode("ascii")
    right_render = base64.b64encode(render_svg(pair.right).encode("utf-8")).decode("ascii")
    answer = client.judge(
        pair_id=pair.pair_id,
        left_render=left_render,
        right_render=right_render,
        left_meta=layout_to_dict(pair.left),
        right_meta=layout_to_dict(pair.right),
    )
    if answer not in _VALID_LABELS:
        raise ProtocolError(f"remote judge answered unknown label {answer!r}")
    return Verdict(label=PreferenceLabel(answer))


PairJudge = Callable[[PreferencePair], Verdict]


def debias(pair: PreferencePair, inner: PairJudge) -> Verdict:
    """Evaluate both presentation orders and reconcile into one verdict.

    Swap-consistent directional answers stand; a directional contradiction
    collapses to both_bad (or both_good if either order said so); a
    non-directional answer in either order wins over a directional one.
    """
    first = inner(pair)
    second = inner(pair.swapped())
    mapped = second.label.swapped()

    if first.label == mapped:
        label = first.label
    elif first.label.is_directional and mapped.is_directional:
        label = PreferenceLabel.BOTH_BAD
    elif not first.label.is_directional and not mapped.is_directional:
        # both_good vs both_bad: at least one order saw both_good
        label = PreferenceLabel.BOTH_GOOD
    else:
        label = first.label if not first.label.is_directional else mapped

    return Verdict(
        label=label,
        left_score=first.left_score,
        right_score=first.right_score,
        swapped_label=second.label,
        debiased=True,
    )


LayoutGate = Callable[[Layout], tuple[bool, tuple[str, ...]]]


def heuristic_gate(
    score_threshold: float = 0.4,
    overlap_budget: float = 0.01,
    weights: JudgeWeights | None = None,
) -> LayoutGate:
    """Gate discarding layouts with overflow, excess overlap, or low score."""

    def gate(layout: Layout) -> tuple[bool, tuple[str, ...]]:
        reasons = []
        if total_overflow(layout) > 0.0:
            reasons.append("overflow")
        if total_overlap(layout) > overlap_budget:
            reasons.append("overlap")
        if heuristic_score(layout, weights) < score_threshold:
            reasons.append("low_score")
        return (not reasons, tuple(reasons))

    return gate


@dataclass(frozen=True)
class FilterResult:
    kept: tuple[Layout, ...]
    discarded: tuple[tuple[Layout, tuple[str, ...]], ...]


def filter_low_quality(
    pool: Sequence[Layout], gate: LayoutGate | None = None
) -> FilterResult:
    """Split a pool into kept and discarded layouts with per-layout reasons."""
    gate = gate or heuristic_gate()
    kept: list[Layout] = []
    discarded: list[tuple[Layout, tuple[str, ...]]] = []
    for layout in pool:
        ok, reasons = gate(layout)
        if ok:
            kept.append(layout)
        else:
            discarded.append((layout, reasons))
    return FilterResult(kept=tuple(kept), discarded=tuple(discarded))
