"""Dataset persistence, splits, annotation records, and the statistics report.

Directory layout: layouts/*.json, pairs.jsonl (layouts by reference),
annotations.jsonl, manifest.json, optional groups.jsonl. Writes are atomic
(temp file then rename); unknown fields round-trip untouched.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

from .core import Layout, layout_from_dict, layout_to_dict
from .metrics import AgreementRates, MetricsError, agreement_rates
from .pairs import PairProvenance, PreferenceLabel, PreferencePair
from .util import atomic_write_text, canonical_json, largest_remainder

SPLIT_NAMES = ("train", "val", "test")
DEFAULT_SPLIT_RATIO = (8735, 500, 1000)


class DatasetError(Exception):
    pass


class IntegrityError(DatasetError):
    """A reference points at a missing or inconsistent object."""


@dataclass(frozen=True)
class AnnotationRecord:
    pair_id: str
    annotator_id: str
    label: PreferenceLabel
    timestamp: float
    duration_ms: int | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        d = {
            "pair_id": self.pair_id,
            "annotator_id": self.annotator_id,
            "label": self.label.value,
            "timestamp": self.timestamp,
            "duration_ms": self.duration_ms,
        }
        d.update(self.extra)
        return d

    @staticmethod
    def from_dict(d: dict) -> "AnnotationRecord":
        known = {"pair_id", "annotator_id", "label", "timestamp", "duration_ms"}
        return AnnotationRecord(
            pair_id=str(d["pair_id"]),
            annotator_id=str(d["annotator_id"]),
            label=PreferenceLabel(d["label"]),
            timestamp=float(d["timestamp"]),
            duration_ms=None if d.get("duration_ms") is None else int(d["duration_ms"]),
            extra={k: v for k, v in d.items() if k not in known},
        )


@dataclass(frozen=True)
class DatasetManifest:
    pair_ids: tuple[str, ...]
    split_assignment: dict[str, str] = field(default_factory=dict)
    provenance_counts: dict[str, dict[str, int]] = field(default_factory=dict)
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        for pair_id, split in self.split_assignment.items():
            if split not in SPLIT_NAMES:
                raise DatasetError(f"unknown split {split!r} for pair {pair_id!r}")

    def to_dict(self) -> dict:
        d = {
            "pair_ids": list(self.pair_ids),
            "split_assignment": dict(self.split_assignment),
            "provenance_counts": {k: dict(v) for k, v in self.provenance_counts.items()},
        }
        d.update(self.extra)
        return d

    @staticmethod
    def from_dict(d: dict) -> "DatasetManifest":
        known = {"pair_ids", "split_assignment", "provenance_counts"}
        return DatasetManifest(
            pair_ids=tuple(d.get("pair_ids", ())),
            split_assignment=dict(d.get("split_assignment", {})),
            provenance_counts={
                k: dict(v) for k, v in d.get("provenance_counts", {}).items()
            },
            extra={k: v for k, v in d.items() if k not in known},
        )


@dataclass
class Dataset:
    layouts: dict[str, Layout]
    pairs: list[PreferencePair]
    manifest: DatasetManifest
    annotations: list[AnnotationRecord] = field(default_factory=list)
    groups: dict[str, list[list[str]]] = field(default_factory=dict)

    def pair(self, pair_id: str) -> PreferencePair:
        for p in self.pairs:
            if p.pair_id == pair_id:
                return p
        raise KeyError(pair_id)


def pair_to_record(pair: PreferencePair) -> dict:
    d = {
        "pair_id": pair.pair_id,
        "left": pair.left.layout_id,
        "right": pair.right.layout_id,
        "gold_label": pair.gold_label.value if pair.gold_label else None,
        "annotator_labels": [[a, l.value] for a, l in pair.annotator_labels],
        "provenance": pair.provenance.value,
    }
    d.update(pair.extra)
    return d


_PAIR_KEYS = {"pair_id", "left", "right", "gold_label", "annotator_labels", "provenance"}


def pair_from_record(d: dict, layouts: dict[str, Layout]) -> PreferencePair:
    for side in ("left", "right"):
        if d[side] not in layouts:
            raise IntegrityError(
                f"pair {d.get('pair_id')!r} references missing layout {d[side]!r}"
            )
    return PreferencePair(
        pair_id=str(d["pair_id"]),
        left=layouts[d["left"]],
        right=layouts[d["right"]],
        gold_label=PreferenceLabel(d["gold_label"]) if d.get("gold_label") else None,
        annotator_labels=tuple(
            (str(a), PreferenceLabel(l)) for a, l in d.get("annotator_labels", [])
        ),
        provenance=PairProvenance(d.get("provenance", "external")),
        extra={k: v for k, v in d.items() if k not in _PAIR_KEYS},
    )


def _check_filename_safe(layout_id: str) -> None:
    if "/" in layout_id or "\\" in layout_id or layout_id in (".", "..", ""):
        raise DatasetError(f"layout_id {layout_id!r} is not filename-safe")


def save_dataset(path: Path | str, dataset: Dataset) -> None:
    root = Path(path)
    layouts_dir = root / "layouts"
    layouts_dir.mkdir(parents=True, exist_ok=True)
    for layout_id in sorted(dataset.layouts):
        _check_filename_safe(layout_id)
        atomic_write_text(
            layouts_dir / f"{layout_id}.json",
            canonical_json(layout_to_dict(dataset.layouts[layout_id])) + "\n",
        )
    atomic_write_text(
        root / "pairs.jsonl",
        "".join(canonical_json(pair_to_record(p)) + "\n" for p in dataset.pairs),
    )
    atomic_write_text(
        root / "annotations.jsonl",
        "".join(canonical_json(r.to_dict()) + "\n" for r in dataset.annotations),
    )
    atomic_write_text(
        root / "manifest.json", canonical_json(dataset.manifest.to_dict()) + "\n"
    )
    if dataset.groups:
        atomic_write_text(
            root / "groups.jsonl",
            "".join(
                canonical_json({"layout_id": lid, "groups": dataset.groups[lid]}) + "\n"
                for lid in sorted(dataset.groups)
            ),
        )


def _parse_line(line: str, path: Path, line_no: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DatasetError(f"{path}:{line_no}: expected a JSON object")
    return obj


def _revalidate(layout: Layout) -> None:
    for e in layout.elements:
        if e.bbox.w <= 0 or e.bbox.h <= 0:
            raise IntegrityError(
                f"layout {layout.layout_id!r} element {e.id!r} has non-positive size"
            )


def load_dataset(path: Path | str) -> Dataset:
    root = Path(path)
    layouts: dict[str, Layout] = {}
    layouts_dir = root / "layouts"
    if layouts_dir.is_dir():
        for f in sorted(layouts_dir.glob("*.json")):
            layout = layout_from_dict(json.loads(f.read_text(encoding="utf-8")))
            _revalidate(layout)
            layouts[layout.layout_id] = layout

    pairs: list[PreferencePair] = []
    pairs_path = root / "pairs.jsonl"
    if pairs_path.exists():
        for i, line in enumerate(pairs_path.read_text(encoding="utf-8").splitlines(), 1):
            if line.strip():
                pairs.append(pair_from_record(_parse_line(line, pairs_path, i), layouts))

    annotations: list[AnnotationRecord] = []
    ann_path = root / "annotations.jsonl"
    if ann_path.exists():
        for i, line in enumerate(ann_path.read_text(encoding="utf-8").splitlines(), 1):
            if line.strip():
                annotations.append(AnnotationRecord.from_dict(_parse_line(line, ann_path, i)))

    manifest_path = root / "manifest.json"
    if manifest_path.exists():
        manifest = DatasetManifest.from_dict(
            json.loads(manifest_path.read_text(encoding="utf-8"))
        )
    else:
        manifest = DatasetManifest(pair_ids=tuple(p.pair_id for p in pairs))

    groups: dict[str, list[list[str]]] = {}
    groups_path = root / "groups.jsonl"
    if groups_path.exists():
        for i, line in enumerate(groups_path.read_text(encoding="utf-8").splitlines(), 1):
            if line.strip():
                obj = _parse_line(line, groups_path, i)
                groups[str(obj["layout_id"])] = [[str(e) for e in g] for g in obj["groups"]]

    known_pairs = {p.pair_id for p in pairs}
    for pair_id in manifest.pair_ids:
        if pair_id not in known_pairs:
            raise IntegrityError(f"manifest references missing pair {pair_id!r}")

    return Dataset(
        layouts=layouts, pairs=pairs, manifest=manifest, annotations=annotations, groups=groups
    )


# --- Splitting ----------------------------------------------------------------


def split(
    pairs: list[PreferencePair],
    ratios: tuple[float, float, float] = DEFAULT_SPLIT_RATIO,
    seed: int = 0,
    stratified: bool = False,
) -> dict[str, str]:
    """Assign every pair to train/val/test.

    Seeded shuffle then contiguous cut, with split sizes from
    largest-remainder apportionment of the ratio. Stratified mode applies
    the same scheme within each gold-label stratum to keep label
    proportions stable across splits.
    """
    import random

    if any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise DatasetError("ratios must be nonnegative and sum positive")
    n_splits = sum(1 for r in ratios if r > 0)
    if len(pairs) < n_splits:
        raise DatasetError(f"cannot split {len(pairs)} pairs into {n_splits} nonempty splits")
    ids = [p.pair_id for p in pairs]
    if len(set(ids)) != len(ids):
        raise DatasetError("duplicate pair ids")

    def cut(id_list: list[str], rng: "random.Random") -> dict[str, str]:
        shuffled = list(id_list)
        rng.shuffle(shuffled)
        sizes = largest_remainder(len(shuffled), ratios)
        out: dict[str, str] = {}
        start = 0
        for name, size in zip(SPLIT_NAMES, sizes):
            for pid in shuffled[start : start + size]:
                out[pid] = name
            start += size
        return out

    rng = random.Random(seed)
    if not stratified:
        return cut(ids, rng)

    strata: dict[str, list[str]] = {}
    for p in pairs:
        key = p.gold_label.value if p.gold_label else "unlabeled"
        strata.setdefault(key, []).append(p.pair_id)
    assignment: dict[str, str] = {}
    for key in sorted(strata):
        assignment.update(cut(strata[key], random.Random((seed, key).__repr__())))
    return assignment


def resolve_gold(labels: list[PreferenceLabel]) -> PreferenceLabel:
    """Majority label; ties resolve to both_bad."""
    if not labels:
        raise DatasetError("no labels to resolve")
    counts = Counter(labels)
    top = counts.most_common()
    if len(top) > 1 and top[0][1] == top[1][1]:
        return PreferenceLabel.BOTH_BAD
    return top[0][0]


def apply_annotations(dataset: Dataset) -> Dataset:
    """Fold annotation records into pairs and resolve gold labels."""
    by_pair: dict[str, list[AnnotationRecord]] = {}
    for record in dataset.annotations:
        by_pair.setdefault(record.pair_id, []).append(record)
    new_pairs = []
    for pair in dataset.pairs:
        records = by_pair.get(pair.pair_id)
        if not records:
            new_pairs.append(pair)
            continue
        labels = tuple((r.annotator_id, r.label) for r in records)
        gold = resolve_gold([r.label for r in records])
        extra = dict(pair.extra)
        extra["gold_resolution"] = "majority_tie_both_bad"
        new_pairs.append(
            replace(pair, annotator_labels=labels, gold_label=gold, extra=extra)
        )
    return replace(dataset, pairs=new_pairs)


# --- Statistics ---------------------------------------------------------------


@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]  # len(edges) == len(counts) + 1
    counts: tuple[int, ...]

    def to_rows(self) -> list[tuple[float, float, int]]:
        return [
            (self.edges[i], self.edges[i + 1], self.counts[i])
            for i in range(len(self.counts))
        ]


def _histogram(values: list[float], bin_width: float) -> Histogram:
    if not values:
        return Histogram(edges=(), counts=())
    lo = math.floor(min(values) / bin_width) * bin_width
    hi = math.ceil(max(values) / bin_width) * bin_width
    if hi <= lo:
        hi = lo + bin_width
    n_bins = int(round((hi - lo) / bin_width))
    counts = [0] * n_bins
    for v in values:
        idx = min(int((v - lo) / bin_width), n_bins - 1)
        counts[idx] += 1
    edges = tuple(lo + i * bin_width for i in range(n_bins + 1))
    return Histogram(edges=edges, counts=tuple(counts))


@dataclass(frozen=True)
class StatsReport:
    n_pairs: int
    n_layouts: int
    aspect_log2_histogram: Histogram
    variant_distribution: dict[str, int]
    variant_proportions: dict[str, float]
    label_distribution: dict[str, int]
    element_count_histogram: dict[int, int]
    group_count_histogram: dict[int, int] | None
    agreement: AgreementRates | None

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "n_layouts": self.n_layouts,
            "aspect_log2_histogram": {
                "edges": list(self.aspect_log2_histogram.edges),
                "counts": list(self.aspect_log2_histogram.counts),
            },
            "variant_distribution": dict(self.variant_distribution),
            "variant_proportions": dict(self.variant_proportions),
            "label_distribution": dict(self.label_distribution),
            "element_count_histogram": {
                str(k): v for k, v in sorted(self.element_count_histogram.items())
            },
            "group_count_histogram": (
                None
                if self.group_count_histogram is None
                else {str(k): v for k, v in sorted(self.group_count_histogram.items())}
            ),
            "agreement": (
                None
                if self.agreement is None
                else {
                    "four_class": self.agreement.four_class,
                    "binary": self.agreement.binary,
                    "n_annotator_pairs": self.agreement.n_annotator_pairs,
                }
            ),
        }

    def to_csvs(self) -> dict[str, str]:
        files = {}
        rows = ["bin_lo,bin_hi,count"]
        rows += [f"{lo},{hi},{c}" for lo, hi, c in self.aspect_log2_histogram.to_rows()]
        files["aspect_log2_histogram.csv"] = "\n".join(rows) + "\n"
        rows = ["variant,count,proportion"]
        rows += [
            f"{k},{self.variant_distribution[k]},{self.variant_proportions[k]}"
            for k in sorted(self.variant_distribution)
        ]
        files["variant_distribution.csv"] = "\n".join(rows) + "\n"
        rows = ["label,count"]
        rows += [f"{k},{v}" for k, v in sorted(self.label_distribution.items())]
        files["label_distribution.csv"] = "\n".join(rows) + "\n"
        rows = ["n_elements,n_layouts"]
        rows += [f"{k},{v}" for k, v in sorted(self.element_count_histogram.items())]
        files["element_count_histogram.csv"] = "\n".join(rows) + "\n"
        if self.group_count_histogram is not None:
            rows = ["n_groups,n_layouts"]
            rows += [f"{k},{v}" for k, v in sorted(self.group_count_histogram.items())]
            files["group_count_histogram.csv"] = "\n".join(rows) + "\n"
        return files


def stats_report(dataset: Dataset, aspect_bin_width: float = 0.25) -> StatsReport:
    """Exact dataset statistics: aspect/log2 histogram, variant and label
    distributions, per-layout element (and group) counts, agreement rates."""
    if not dataset.pairs and not dataset.layouts:
        raise DatasetError("empty dataset")

    aspects = [l.canvas.log2_aspect for l in dataset.layouts.values()]
    variant_counts = Counter(p.left.variant.value for p in dataset.pairs)
    n_pairs = len(dataset.pairs)
    variant_proportions = {
        k: v / n_pairs for k, v in variant_counts.items()
    } if n_pairs else {}
    label_counts = Counter(
        p.gold_label.value if p.gold_label else "unlabeled" for p in dataset.pairs
    )
    element_counts = Counter(len(l.elements) for l in dataset.layouts.values())
    group_counts = (
        Counter(len(g) for g in dataset.groups.values()) if dataset.groups else None
    )

    agreement = None
    by_pair: dict[str, list[PreferenceLabel]] = {}
    for record in dataset.annotations:
        by_pair.setdefault(record.pair_id, []).append(record.label)
    multi = [labels for labels in by_pair.values() if len(labels) >= 2]
    if multi:
        try:
            agreement = agreement_rates(multi)
        except MetricsError:
            agreement = None

    return StatsReport(
        n_pairs=n_pairs,
        n_layouts=len(dataset.layouts),
        aspect_log2_histogram=_histogram(aspects, aspect_bin_width),
        variant_distribution=dict(variant_counts),
        variant_proportions=variant_proportions,
        label_distribution=dict(label_counts),
        element_count_histogram=dict(element_counts),
        group_count_histogram=dict(group_counts) if group_counts else None,
        agreement=agreement,
    )
