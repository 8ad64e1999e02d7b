"""IoU-based clustering with representative selection, geometric layout
embeddings, and diversity-ranked preference-pair sampling."""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Callable, Hashable

import numpy as np

from .core import BBox, Layout, VariantKind, iou
from .pairs import PairProvenance, PreferencePair
from .util import largest_remainder


class DiversityError(Exception):
    pass


def layout_similarity(a: Layout, b: Layout) -> float:
    """Mean per-element IoU between two arrangements of one element set."""
    if a.element_ids != b.element_ids:
        raise DiversityError(
            f"layouts {a.layout_id!r} and {b.layout_id!r} have different element sets"
        )
    boxes_b = {e.id: e.bbox for e in b.elements}
    scores = [iou(e.bbox, boxes_b[e.id]) for e in a.elements]
    return sum(scores) / len(scores)


@dataclass(frozen=True)
class SimilarityMatrix:
    ids: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        n = len(self.ids)
        if self.values.shape != (n, n):
            raise DiversityError(f"similarity matrix must be {n}x{n}")
        if not np.array_equal(self.values, self.values.T):
            raise DiversityError("similarity matrix must be symmetric")
        if not np.all(np.diag(self.values) == 1.0):
            raise DiversityError("similarity matrix diagonal must be 1")
        if np.any(self.values < 0.0) or np.any(self.values > 1.0):
            raise DiversityError("similarity entries must lie in [0,1]")

    def get(self, id_a: str, id_b: str) -> float:
        i, j = self.ids.index(id_a), self.ids.index(id_b)
        return float(self.values[i, j])


def similarity_matrix(pool: list[Layout]) -> SimilarityMatrix:
    n = len(pool)
    values = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            s = layout_similarity(pool[i], pool[j])
            values[i, j] = values[j, i] = s
    return SimilarityMatrix(ids=tuple(l.layout_id for l in pool), values=values)


@dataclass(frozen=True)
class ClusterSet:
    """Disjoint clusters of layout ids, each with a representative member."""

    clusters: tuple[frozenset[str], ...]
    representatives: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.clusters) != len(self.representatives):
            raise DiversityError("one representative per cluster required")
        for cluster, rep in zip(self.clusters, self.representatives):
            if rep not in cluster:
                raise DiversityError(f"representative {rep!r} outside its cluster")


def _cluster_key(cluster: frozenset[str]) -> str:
    return min(cluster)


def _avg_cross_similarity(sim: SimilarityMatrix, a: list[int], b: list[int]) -> float:
    total = 0.0
    for i in a:
        for j in b:
            total += float(sim.values[i, j])
    return total / (len(a) * len(b))


def cluster_layouts(pool: list[Layout], tau_sim: float = 0.6) -> ClusterSet:
    """Greedy average-linkage merging of layouts above a similarity floor.

    Repeatedly merges the cluster pair with the highest average cross-pair
    similarity while that average is >= tau_sim. Ties break on the
    lexicographically smallest (min-id, min-id) cluster-pair key.
    """
    if not pool:
        raise DiversityError("empty layout pool")
    sim = similarity_matrix(pool)
    ids = sim.ids
    clusters: list[list[int]] = [[i] for i in range(len(pool))]

    while len(clusters) > 1:
        best: tuple[float, tuple[str, str], int, int] | None = None
        for ai, bi in combinations(range(len(clusters)), 2):
            avg = _avg_cross_similarity(sim, clusters[ai], clusters[bi])
            key_pair = tuple(
                sorted(
                    (
                        _cluster_key(frozenset(ids[i] for i in clusters[ai])),
                        _cluster_key(frozenset(ids[i] for i in clusters[bi])),
                    )
                )
            )
            if best is None or avg > best[0] or (avg == best[0] and key_pair < best[1]):
                best = (avg, key_pair, ai, bi)
        assert best is not None
        if best[0] < tau_sim:
            break
        _, _, ai, bi = best
        merged = clusters[ai] + clusters[bi]
        clusters = [c for k, c in enumerate(clusters) if k not in (ai, bi)]
        clusters.append(merged)

    id_clusters = sorted(
        (frozenset(ids[i] for i in c) for c in clusters), key=_cluster_key
    )
    cluster_set = ClusterSet(
        clusters=tuple(id_clusters),
        representatives=tuple(_representative(c, sim) for c in id_clusters),
    )
    return cluster_set


def _representative(cluster: frozenset[str], sim: SimilarityMatrix) -> str:
    members = sorted(cluster)
    if len(members) == 1:
        return members[0]
    best_id = None
    best_mean = -1.0
    for m in members:
        mean = sum(sim.get(m, o) for o in members if o != m) / (len(members) - 1)
        if mean > best_mean:
            best_id, best_mean = m, mean
    return best_id  # sorted iteration makes ties resolve to the smaller id


def select_representatives(cluster_set: ClusterSet, sim: SimilarityMatrix) -> tuple[str, ...]:
    """Per cluster, the member with the highest mean similarity to the rest."""
    if any(not c for c in cluster_set.clusters):
        raise DiversityError("clusters must be nonempty")
    return tuple(_representative(c, sim) for c in cluster_set.clusters)


class SelectionMethod(str, Enum):
    CLUSTER_REPS = "cluster-reps"
    MIN_MUTUAL = "min-mutual"


def select_distinct(
    pool: list[Layout],
    k: int,
    tau_sim: float = 0.6,
    method: SelectionMethod = SelectionMethod.CLUSTER_REPS,
) -> list[str]:
    """Pick up to k mutually distinct layouts from a pool.

    cluster-reps returns the representatives of the k largest clusters;
    min-mutual greedily grows a set minimizing mean mutual similarity.
    """
    if k < 1:
        raise DiversityError("k must be >= 1")
    if method is SelectionMethod.CLUSTER_REPS:
        cs = cluster_layouts(pool, tau_sim)
        ranked = sorted(
            zip(cs.clusters, cs.representatives),
            key=lambda cr: (-len(cr[0]), _cluster_key(cr[0])),
        )
        return [rep for _, rep in ranked[:k]]

    sim = similarity_matrix(pool)
    ids = sorted(sim.ids)
    if len(ids) <= k:
        return ids
    first_pair = min(
        combinations(ids, 2), key=lambda p: (sim.get(p[0], p[1]), p)
    )
    chosen = list(first_pair)[: min(k, 2)]
    while len(chosen) < k:
        candidates = [i for i in ids if i not in chosen]
        nxt = min(
            candidates,
            key=lambda c: (sum(sim.get(c, o) for o in chosen) / len(chosen), c),
        )
        chosen.append(nxt)
    return sorted(chosen)


# --- Feature embeddings ------------------------------------------------------

GRID_SIZE = 8

_KIND_ORDER = ("text", "image", "shape", "other")


class FeatureSource(str, Enum):
    GEOMETRIC = "geometric"
    REMOTE = "remote"


@dataclass(frozen=True)
class FeatureVector:
    dims: np.ndarray
    source: FeatureSource

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.dims)):
            raise DiversityError("feature vector contains non-finite values")


def _cell_coverage(boxes: list[BBox], cx1: float, cy1: float, cx2: float, cy2: float) -> float:
    """Fraction of one grid cell covered by the union of the boxes."""
    clipped = []
    for b in boxes:
        x1, y1 = max(b.x, cx1), max(b.y, cy1)
        x2, y2 = min(b.x2, cx2), min(b.y2, cy2)
        if x2 > x1 and y2 > y1:
            clipped.append((x1, y1, x2, y2))
    if not clipped:
        return 0.0
    xs = sorted({v for r in clipped for v in (r[0], r[2])})
    ys = sorted({v for r in clipped for v in (r[1], r[3])})
    area = 0.0
    for xi in range(len(xs) - 1):
        for yi in range(len(ys) - 1):
            mx = (xs[xi] + xs[xi + 1]) / 2.0
            my = (ys[yi] + ys[yi + 1]) / 2.0
            if any(r[0] <= mx <= r[2] and r[1] <= my <= r[3] for r in clipped):
                area += (xs[xi + 1] - xs[xi]) * (ys[yi + 1] - ys[yi])
    return area / ((cx2 - cx1) * (cy2 - cy1))


def embed_geometric(layout: Layout) -> FeatureVector:
    """Deterministic geometric embedding: 8x8 occupancy grid, per-kind area
    totals, element count, and canvas log-aspect."""
    boxes = [e.bbox for e in layout.elements]
    grid = []
    step = 1.0 / GRID_SIZE
    for gy in range(GRID_SIZE):
        for gx in range(GRID_SIZE):
            grid.append(
                _cell_coverage(boxes, gx * step, gy * step, (gx + 1) * step, (gy + 1) * step)
            )
    kind_areas = {k: 0.0 for k in _KIND_ORDER}
    for e in layout.elements:
        kind_areas[e.kind.value] += e.bbox.area
    dims = np.array(
        grid
        + [kind_areas[k] for k in _KIND_ORDER]
        + [float(len(layout.elements)), layout.canvas.log2_aspect]
    )
    return FeatureVector(dims=dims, source=FeatureSource.GEOMETRIC)


def cosine_similarity(a: FeatureVector, b: FeatureVector) -> float:
    na = float(np.linalg.norm(a.dims))
    nb = float(np.linalg.norm(b.dims))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a.dims, b.dims) / (na * nb))


# --- Diversity sampling ------------------------------------------------------

# Stretching-2x and Inverse-Ratio carry the greatest layout variation, so
# they get double the quota weight of the original ratio.
DEFAULT_QUOTA_RATIO: dict[VariantKind, int] = {
    VariantKind.STRETCHING_2X: 4,
    VariantKind.INVERSE_RATIO: 4,
    VariantKind.ORIGINAL_RATIO: 2,
}

VARIANT_ORDER = (
    VariantKind.STRETCHING_2X,
    VariantKind.INVERSE_RATIO,
    VariantKind.ORIGINAL_RATIO,
)


def quotas_for_total(
    total: int, ratio: dict[VariantKind, int] | None = None
) -> dict[VariantKind, int]:
    ratio = ratio or DEFAULT_QUOTA_RATIO
    weights = [ratio.get(v, 0) for v in VARIANT_ORDER]
    parts = largest_remainder(total, weights)
    return dict(zip(VARIANT_ORDER, parts))


Embedder = Callable[[Layout], FeatureVector]


@dataclass(frozen=True)
class SamplingResult:
    pairs: tuple[PreferencePair, ...]
    quotas: dict[VariantKind, int]
    shortfalls: dict[VariantKind, int]

    @property
    def complete(self) -> bool:
        return all(v == 0 for v in self.shortfalls.values())


def sample_diverse_pairs(
    pools: dict[VariantKind, list[Layout]],
    quotas: dict[VariantKind, int],
    embedder: Embedder = embed_geometric,
    max_reuse: int = 1,
    seed: int = 0,
    design_key: Callable[[Layout], Hashable] | None = None,
    low_diversity_threshold: float = 0.999,
) -> SamplingResult:
    """Within each variant bucket, emit the lowest-similarity layout pairs.

    Candidate pairs share one element-id set (same source design; override
    with design_key when ids are not globally unique). Pairs are ranked by
    ascending cosine similarity of feature vectors; a layout is reused at
    most max_reuse times. Infeasible quotas yield a shortfall report and
    partial output rather than an error.
    """
    if max_reuse < 1:
        raise DiversityError("max_reuse must be >= 1")
    key_fn = design_key or (lambda l: l.element_ids)
    rng = random.Random(seed)
    out_pairs: list[PreferencePair] = []
    shortfalls: dict[VariantKind, int] = {}

    for variant in VARIANT_ORDER:
        quota = quotas.get(variant, 0)
        shortfalls[variant] = 0
        if quota == 0:
            continue
        bucket = pools.get(variant, [])
        by_design: dict[Hashable, list[Layout]] = {}
        for layout in bucket:
            by_design.setdefault(key_fn(layout), []).append(layout)

        candidates: list[tuple[float, tuple[str, str], Layout, Layout]] = []
        for design_layouts in by_design.values():
            ordered = sorted(design_layouts, key=lambda l: l.layout_id)
            features = {l.layout_id: embedder(l) for l in ordered}
            for a, b in combinations(ordered, 2):
                s = cosine_similarity(features[a.layout_id], features[b.layout_id])
                candidates.append((s, (a.layout_id, b.layout_id), a, b))
        candidates.sort(key=lambda c: (c[0], c[1]))

        used: dict[str, int] = {}
        taken = 0
        for s, _, a, b in candidates:
            if taken >= quota:
                break
            if used.get(a.layout_id, 0) >= max_reuse or used.get(b.layout_id, 0) >= max_reuse:
                continue
            used[a.layout_id] = used.get(a.layout_id, 0) + 1
            used[b.layout_id] = used.get(b.layout_id, 0) + 1
            left, right = (a, b) if rng.random() < 0.5 else (b, a)
            extra = {"feature_similarity": s, "variant": variant.value}
            if s >= low_diversity_threshold:
                extra["low_diversity"] = True
            out_pairs.append(
                PreferencePair(
                    pair_id=f"div__{left.layout_id}__{right.layout_id}",
                    left=left,
                    right=right,
                    provenance=PairProvenance.PIPELINE,
                    extra=extra,
                )
            )
            taken += 1
        shortfalls[variant] = quota - taken

    return SamplingResult(
        pairs=tuple(out_pairs), quotas=dict(quotas), shortfalls=shortfalls
    )
