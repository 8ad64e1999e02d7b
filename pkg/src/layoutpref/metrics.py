"""Evaluation metrics for 4-class preference judging.

Undefined quantities (empty binary subset, degenerate kappa marginals) are
explicit None sentinels, never silent zeros.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .pairs import PreferenceLabel

CLASS_ORDER: tuple[PreferenceLabel, ...] = (
    PreferenceLabel.LEFT,
    PreferenceLabel.RIGHT,
    PreferenceLabel.BOTH_GOOD,
    PreferenceLabel.BOTH_BAD,
)


class MetricsError(Exception):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed [gold][pred] over a fixed class order."""

    classes: tuple
    counts: tuple[tuple[int, ...], ...]

    @property
    def n_total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def row_sum(self, i: int) -> int:
        return sum(self.counts[i])

    def col_sum(self, j: int) -> int:
        return sum(row[j] for row in self.counts)

    def index(self, cls) -> int:
        return self.classes.index(cls)


def confusion(
    preds: Sequence[PreferenceLabel],
    golds: Sequence[PreferenceLabel],
    classes: tuple = CLASS_ORDER,
) -> ConfusionMatrix:
    if len(preds) != len(golds):
        raise MetricsError(f"length mismatch: {len(preds)} preds vs {len(golds)} golds")
    if not preds:
        raise MetricsError("empty prediction/gold lists")
    idx = {c: i for i, c in enumerate(classes)}
    counts = [[0] * len(classes) for _ in classes]
    for p, g in zip(preds, golds):
        counts[idx[g]][idx[p]] += 1
    return ConfusionMatrix(classes=classes, counts=tuple(tuple(r) for r in counts))


def accuracy(cm: ConfusionMatrix) -> float:
    n = cm.n_total
    if n == 0:
        raise MetricsError("empty confusion matrix")
    return sum(cm.counts[i][i] for i in range(len(cm.classes))) / n


def _per_class_f1(cm: ConfusionMatrix, i: int) -> float:
    tp = cm.counts[i][i]
    fp = cm.col_sum(i) - tp
    fn = cm.row_sum(i) - tp
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _present_classes(cm: ConfusionMatrix) -> list[int]:
    """Indices of classes appearing in gold or predictions."""
    return [
        i for i in range(len(cm.classes)) if cm.row_sum(i) > 0 or cm.col_sum(i) > 0
    ]


def macro_f1(cm: ConfusionMatrix, fixed_classes: bool = False) -> float:
    """Unweighted mean of per-class F1.

    By default averages only classes present in gold or predictions;
    fixed_classes=True averages over the full class list.
    """
    indices = range(len(cm.classes)) if fixed_classes else _present_classes(cm)
    if not indices:
        raise MetricsError("empty confusion matrix")
    scores = [_per_class_f1(cm, i) for i in indices]
    return sum(scores) / len(scores)


def weighted_f1(cm: ConfusionMatrix) -> float:
    """Per-class F1 weighted by gold support."""
    n = cm.n_total
    if n == 0:
        raise MetricsError("empty confusion matrix")
    return sum(cm.row_sum(i) * _per_class_f1(cm, i) for i in range(len(cm.classes))) / n


def cohen_kappa(cm: ConfusionMatrix) -> float | None:
    """Chance-corrected agreement; None when marginals are degenerate.

    Computed in integer arithmetic (N*trace - sum(row*col)) / (N^2 - sum(row*col))
    so exact-fraction fixtures come out float-exact.
    """
    n = cm.n_total
    if n == 0:
        raise MetricsError("empty confusion matrix")
    trace = sum(cm.counts[i][i] for i in range(len(cm.classes)))
    marginal = sum(cm.row_sum(i) * cm.col_sum(i) for i in range(len(cm.classes)))
    denominator = n * n - marginal
    if denominator == 0:
        return None
    return (n * trace - marginal) / denominator


@dataclass(frozen=True)
class BinaryAccuracy:
    value: float | None
    n_subset: int


def binary_accuracy(
    preds: Sequence[PreferenceLabel], golds: Sequence[PreferenceLabel]
) -> BinaryAccuracy:
    """Accuracy restricted to indices where gold AND pred are directional."""
    if len(preds) != len(golds):
        raise MetricsError(f"length mismatch: {len(preds)} preds vs {len(golds)} golds")
    if not preds:
        raise MetricsError("empty prediction/gold lists")
    subset = [
        (p, g)
        for p, g in zip(preds, golds)
        if p.is_directional and g.is_directional
    ]
    if not subset:
        return BinaryAccuracy(value=None, n_subset=0)
    correct = sum(1 for p, g in subset if p == g)
    return BinaryAccuracy(value=correct / len(subset), n_subset=len(subset))


@dataclass(frozen=True)
class AgreementRates:
    four_class: float
    binary: float | None
    n_annotator_pairs: int
    n_binary_annotator_pairs: int


def agreement_rates(records: Iterable[Sequence[PreferenceLabel]]) -> AgreementRates:
    """Pairwise inter-annotator agreement pooled over items.

    Each record is the list of labels one item received. The 4-class rate is
    the fraction of agreeing annotator pairs; the binary rate restricts to
    annotator pairs where both labels are directional.
    """
    total = agree = 0
    bin_total = bin_agree = 0
    for labels in records:
        if len(labels) < 2:
            continue
        for a, b in combinations(labels, 2):
            total += 1
            if a == b:
                agree += 1
            if a.is_directional and b.is_directional:
                bin_total += 1
                if a == b:
                    bin_agree += 1
    if total == 0:
        raise MetricsError("no multi-annotated items")
    return AgreementRates(
        four_class=agree / total,
        binary=(bin_agree / bin_total) if bin_total else None,
        n_annotator_pairs=total,
        n_binary_annotator_pairs=bin_total,
    )


@dataclass(frozen=True)
class WinRecord:
    """One comparison of a generated layout against a reference."""

    label: PreferenceLabel
    generated_side: PreferenceLabel  # LEFT or RIGHT

    def __post_init__(self) -> None:
        if not self.generated_side.is_directional:
            raise MetricsError("generated_side must be left or right")


def win_rate(records: Sequence[WinRecord], both_good_half_win: bool = False) -> float:
    """Percent of comparisons won by the generated side."""
    if not records:
        raise MetricsError("no win records")
    credit = 0.0
    for r in records:
        if r.label == r.generated_side:
            credit += 1.0
        elif r.label is PreferenceLabel.BOTH_GOOD and both_good_half_win:
            credit += 0.5
    return 100.0 * credit / len(records)


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    binary_accuracy: float | None
    cohen_kappa: float | None
    macro_f1: float
    weighted_f1: float
    n_total: int
    n_binary_subset: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "binary_accuracy": self.binary_accuracy,
            "cohen_kappa": self.cohen_kappa,
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "n_total": self.n_total,
            "n_binary_subset": self.n_binary_subset,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self) -> str:
        headers = ["Accuracy", "Binary Acc", "Cohen's k", "Macro F1", "Weighted F1"]
        values = [
            self.accuracy,
            self.binary_accuracy,
            self.cohen_kappa,
            self.macro_f1,
            self.weighted_f1,
        ]
        cells = ["undefined" if v is None else f"{v:.3f}" for v in values]
        widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
        head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
        body = "  ".join(c.ljust(w) for c, w in zip(cells, widths))
        return head + "\n" + body


def evaluate(
    preds: Sequence[PreferenceLabel],
    golds: Sequence[PreferenceLabel],
    fixed_classes: bool = False,
) -> MetricsReport:
    cm = confusion(preds, golds)
    binary = binary_accuracy(preds, golds)
    return MetricsReport(
        accuracy=accuracy(cm),
        binary_accuracy=binary.value,
        cohen_kappa=cohen_kappa(cm),
        macro_f1=macro_f1(cm, fixed_classes=fixed_classes),
        weighted_f1=weighted_f1(cm),
        n_total=cm.n_total,
        n_binary_subset=binary.n_subset,
    )
