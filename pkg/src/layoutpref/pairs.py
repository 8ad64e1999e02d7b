"""Preference pairs and the 4-class label vocabulary shared across modules."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .core import Layout


class PreferenceLabel(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTH_GOOD = "both_good"
    BOTH_BAD = "both_bad"

    @property
    def is_directional(self) -> bool:
        return self in (PreferenceLabel.LEFT, PreferenceLabel.RIGHT)

    def swapped(self) -> "PreferenceLabel":
        """Label for the same judgment after swapping sides."""
        if self is PreferenceLabel.LEFT:
            return PreferenceLabel.RIGHT
        if self is PreferenceLabel.RIGHT:
            return PreferenceLabel.LEFT
        return self


class PairProvenance(str, Enum):
    PIPELINE = "pipeline"
    PERTURBATION = "perturbation"
    EXTERNAL = "external"


@dataclass(frozen=True)
class Verdict:
    """A judge's 4-class decision on a pair."""

    label: PreferenceLabel
    left_score: float | None = None
    right_score: float | None = None
    swapped_label: PreferenceLabel | None = None
    debiased: bool = False

    def __post_init__(self) -> None:
        if self.debiased and self.swapped_label is None:
            raise ValueError("debiased verdicts must record the order-swapped label")


@dataclass(frozen=True)
class PreferencePair:
    """Two arrangements of one element set, optionally labeled."""

    pair_id: str
    left: Layout
    right: Layout
    gold_label: PreferenceLabel | None = None
    annotator_labels: tuple[tuple[str, PreferenceLabel], ...] = ()
    provenance: PairProvenance = PairProvenance.PIPELINE
    extra: dict = field(default_factory=dict, compare=False)

    def swapped(self) -> "PreferencePair":
        return PreferencePair(
            pair_id=self.pair_id,
            left=self.right,
            right=self.left,
            gold_label=self.gold_label.swapped() if self.gold_label else None,
            annotator_labels=tuple((a, lbl.swapped()) for a, lbl in self.annotator_labels),
            provenance=self.provenance,
            extra=dict(self.extra),
        )
