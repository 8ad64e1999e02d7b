"""Element grouping: validation, a geometric baseline grouper, a remote
grouper with repair, and Adjusted Rand Index scoring of partitions."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterable, Protocol

from .core import ElementKind, Layout, rect_gap


class GroupingError(Exception):
    pass


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty groups of element ids covering one element set."""

    groups: tuple[frozenset[str], ...]

    def __post_init__(self) -> None:
        if not isinstance(self.groups, tuple):
            object.__setattr__(self, "groups", tuple(frozenset(g) for g in self.groups))

    @staticmethod
    def from_lists(groups: Iterable[Iterable[str]]) -> "Partition":
        return Partition(tuple(frozenset(g) for g in groups))

    @property
    def all_ids(self) -> frozenset[str]:
        out: set[str] = set()
        for g in self.groups:
            out |= g
        return frozenset(out)

    def group_of(self, element_id: str) -> frozenset[str]:
        for g in self.groups:
            if element_id in g:
                return g
        raise KeyError(element_id)

    def to_lists(self) -> list[list[str]]:
        return [sorted(g) for g in self.groups]


@dataclass(frozen=True)
class PartitionViolation:
    rule: str  # "cover", "disjoint", "nonempty"
    detail: str
    ids: tuple[str, ...] = ()


def validate_partition(partition: Partition, layout: Layout) -> list[PartitionViolation]:
    """Check the three partition rules; violations are data, not faults."""
    violations: list[PartitionViolation] = []
    element_ids = set(layout.element_ids)

    seen: dict[str, int] = {}
    for gi, group in enumerate(partition.groups):
        if not group:
            violations.append(
                PartitionViolation("nonempty", f"group {gi} is empty")
            )
        for eid in group:
            seen[eid] = seen.get(eid, 0) + 1

    dupes = sorted(eid for eid, n in seen.items() if n > 1)
    if dupes:
        violations.append(
            PartitionViolation(
                "disjoint", "ids appear in multiple groups", tuple(dupes)
            )
        )

    missing = sorted(element_ids - seen.keys())
    extra = sorted(seen.keys() - element_ids)
    if missing:
        violations.append(
            PartitionViolation("cover", "element ids missing from partition", tuple(missing))
        )
    if extra:
        violations.append(
            PartitionViolation("cover", "partition ids not in layout", tuple(extra))
        )
    return violations


# Kinds allowed to join one group. Identity is not implied: only listed
# pairs merge.
DEFAULT_KIND_COMPATIBILITY: frozenset[frozenset[ElementKind]] = frozenset(
    {
        frozenset({ElementKind.TEXT}),
        frozenset({ElementKind.TEXT, ElementKind.SHAPE}),
        frozenset({ElementKind.IMAGE, ElementKind.TEXT}),
    }
)


@dataclass(frozen=True)
class HeuristicGroupingParams:
    gap_threshold: float = 0.02
    kind_compatibility: frozenset[frozenset[ElementKind]] = DEFAULT_KIND_COMPATIBILITY


def group_heuristic(
    layout: Layout, params: HeuristicGroupingParams | None = None
) -> Partition:
    """Single-link agglomeration by box gap and kind compatibility."""
    params = params or HeuristicGroupingParams()
    elements = layout.elements
    parent = list(range(len(elements)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    for i in range(len(elements)):
        for j in range(i + 1, len(elements)):
            a, b = elements[i], elements[j]
            if frozenset({a.kind, b.kind}) not in params.kind_compatibility:
                continue
            if rect_gap(a.bbox, b.bbox) <= params.gap_threshold:
                union(i, j)

    clusters: dict[int, set[str]] = {}
    for i, e in enumerate(elements):
        clusters.setdefault(find(i), set()).add(e.id)
    groups = sorted((frozenset(g) for g in clusters.values()), key=lambda g: min(g))
    return Partition(tuple(groups))


class GrouperClient(Protocol):
    def group(self, layout: Layout) -> list[list[str]]: ...


@dataclass(frozen=True)
class RemoteGroupingResult:
    partition: Partition
    repairs: tuple[str, ...]


def group_remote(layout: Layout, client: GrouperClient) -> RemoteGroupingResult:
    """Fetch a partition from a remote grouper and repair invalid output.

    Orphaned ids become singletons; duplicated ids keep their first-listed
    membership; ids unknown to the layout are dropped. Every repair is logged.
    """
    raw_groups = client.group(layout)
    element_ids = set(layout.element_ids)
    repairs: list[str] = []

    seen: set[str] = set()
    groups: list[list[str]] = []
    for raw in raw_groups:
        kept: list[str] = []
        for eid in raw:
            if eid not in element_ids:
                repairs.append(f"dropped unknown id {eid!r}")
                continue
            if eid in seen:
                repairs.append(f"kept duplicated id {eid!r} in its first-listed group")
                continue
            seen.add(eid)
            kept.append(eid)
        if kept:
            groups.append(kept)
        elif raw:
            repairs.append("removed group left empty by repair")

    for eid in sorted(element_ids - seen):
        repairs.append(f"assigned orphaned id {eid!r} to a singleton group")
        groups.append([eid])

    partition = Partition.from_lists(groups)
    leftover = validate_partition(partition, layout)
    if leftover:
        raise GroupingError(f"unrepairable remote partition: {leftover}")
    return RemoteGroupingResult(partition=partition, repairs=tuple(repairs))


# Gold-partition files: one JSON object per layout, {layout_id, groups}.


def gold_partition_to_dict(layout_id: str, partition: Partition) -> dict:
    return {"layout_id": layout_id, "groups": partition.to_lists()}


def load_gold_partitions(path) -> dict[str, Partition]:
    """Read a gold-partition JSONL file into {layout_id: Partition}."""
    import json
    from pathlib import Path

    out: dict[str, Partition] = {}
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if "layout_id" not in obj or "groups" not in obj:
            raise GroupingError(f"{path}:{i}: expected keys layout_id and groups")
        out[str(obj["layout_id"])] = Partition.from_lists(
            [[str(e) for e in g] for g in obj["groups"]]
        )
    return out


def ari(a: Partition, b: Partition) -> float:
    """Adjusted Rand Index between two partitions of the same element set.

    (RI - E[RI]) / (max RI - E[RI]) from the pair-counting contingency
    table; degenerate marginals (both trivial partitions) score 1.0.
    """
    ids_a, ids_b = a.all_ids, b.all_ids
    if ids_a != ids_b:
        raise GroupingError(
            f"partitions cover different element sets: {sorted(ids_a ^ ids_b)}"
        )
    n = len(ids_a)
    if n == 0:
        raise GroupingError("empty partitions")

    label_b: dict[str, int] = {}
    for gi, group in enumerate(b.groups):
        for eid in group:
            label_b[eid] = gi

    # contingency[(i, j)] = |A_i  intersect  B_j|
    contingency: dict[tuple[int, int], int] = {}
    row_sums = [len(g) for g in a.groups]
    col_sums = [len(g) for g in b.groups]
    for gi, group in enumerate(a.groups):
        for eid in group:
            key = (gi, label_b[eid])
            contingency[key] = contingency.get(key, 0) + 1

    index = sum(comb(v, 2) for v in contingency.values())
    sum_a = sum(comb(v, 2) for v in row_sums)
    sum_b = sum(comb(v, 2) for v in col_sums)
    pairs = comb(n, 2)
    expected = sum_a * sum_b / pairs if pairs else 0.0
    max_index = (sum_a + sum_b) / 2.0
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)
