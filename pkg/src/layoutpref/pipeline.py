"""Five-stage curation pipeline: grouping, candidate generation per variant,
filtering, clustering with representative selection, refinement, and
diversity sampling into a preference-pair dataset.

Every stage writes its artifacts plus a completion marker; reruns skip
completed stages whose config hash still matches, so a failed run resumes
at the stage that broke.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .augment import GeneratorRequest, fetch_candidates, group_payloads
from .clients import (
    HttpEndpoint,
    HttpGeneratorClient,
    HttpGrouperClient,
    HttpRefinerClient,
    remote_embedder,
    HttpEmbedderClient,
)
from .core import Layout, VariantKind, layout_from_dict, layout_to_dict
from .augment import apply_variant
from .dataset import Dataset, DatasetManifest, save_dataset
from .diversity import (
    SelectionMethod,
    embed_geometric,
    quotas_for_total,
    sample_diverse_pairs,
    select_distinct,
)
from .grouping import group_heuristic, group_remote
from .judge import heuristic_gate, filter_low_quality
from .refine import RefineConfig, refine_layout, refine_remote
from .stubs import StubGenerator
from .util import atomic_write_text, canonical_json


class PipelineError(Exception):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    input_dir: str
    out_dir: str
    seed: int = 0
    num_samples: int = 10
    variants: tuple[str, ...] = tuple(v.value for v in VariantKind)
    tau_sim: float = 0.6
    top_k_distinct: int = 3
    selection_method: str = SelectionMethod.CLUSTER_REPS.value
    filter_threshold: float = 0.4
    filter_overlap_budget: float = 0.01
    total_pairs: int = 10
    max_reuse: int = 1
    snap_tolerance: float = 0.01
    max_refine_iterations: int = 200
    generator_url: str | None = None
    grouper_url: str | None = None
    refiner_url: str | None = None
    embedder_url: str | None = None
    stub_generator: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode("utf-8")).hexdigest()


_ENV_OVERRIDES = {
    "LAYOUTPREF_GENERATOR_URL": "generator_url",
    "LAYOUTPREF_GROUPER_URL": "grouper_url",
    "LAYOUTPREF_REFINER_URL": "refiner_url",
    "LAYOUTPREF_EMBEDDER_URL": "embedder_url",
}


def load_config(path: Path | str, env: dict[str, str] | None = None) -> PipelineConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if "variants" in raw:
        raw["variants"] = tuple(raw["variants"])
    cfg = PipelineConfig(**raw)
    env = os.environ if env is None else env
    overrides = {
        attr: env[var] for var, attr in _ENV_OVERRIDES.items() if env.get(var)
    }
    return replace(cfg, **overrides) if overrides else cfg


@dataclass
class RunReport:
    stages: dict[str, dict]
    dataset_dir: str
    resumed_stages: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "stages": self.stages,
            "dataset_dir": self.dataset_dir,
            "resumed_stages": self.resumed_stages,
        }


class _Stage:
    """Artifact directory with a complete-marker guarding resume."""

    def __init__(self, root: Path, name: str, config_hash: str):
        self.dir = root / name
        self.name = name
        self._hash = config_hash

    @property
    def marker(self) -> Path:
        return self.dir / "complete.json"

    def is_complete(self) -> bool:
        if not self.marker.exists():
            return False
        data = json.loads(self.marker.read_text(encoding="utf-8"))
        return data.get("config_hash") == self._hash

    def mark_complete(self, counts: dict) -> None:
        atomic_write_text(
            self.marker,
            canonical_json({"config_hash": self._hash, "counts": counts}) + "\n",
        )

    def counts(self) -> dict:
        return json.loads(self.marker.read_text(encoding="utf-8"))["counts"]

    def write_jsonl(self, name: str, objs: list[dict]) -> None:
        atomic_write_text(
            self.dir / name, "".join(canonical_json(o) + "\n" for o in objs)
        )

    def read_jsonl(self, name: str) -> list[dict]:
        path = self.dir / name
        if not path.exists():
            return []
        return [
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]


def _load_input_layouts(input_dir: str) -> list[Layout]:
    paths = sorted(Path(input_dir).glob("*.json"))
    if not paths:
        raise PipelineError(f"no layout json files in {input_dir!r}")
    layouts = [
        layout_from_dict(json.loads(p.read_text(encoding="utf-8"))) for p in paths
    ]
    return sorted(layouts, key=lambda l: l.layout_id)


def run_pipeline(cfg: PipelineConfig) -> RunReport:
    out_root = Path(cfg.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    config_hash = cfg.config_hash()
    atomic_write_text(out_root / "config.snapshot.json", canonical_json(cfg.to_dict()) + "\n")

    inputs = _load_input_layouts(cfg.input_dir)
    report = RunReport(stages={}, dataset_dir=str(out_root / "dataset"))

    # Stage 1: grouping
    s1 = _Stage(out_root, "stage1_grouping", config_hash)
    if s1.is_complete():
        report.resumed_stages.append(s1.name)
    else:
        grouper = (
            HttpGrouperClient(HttpEndpoint(cfg.grouper_url)) if cfg.grouper_url else None
        )
        rows = []
        for layout in inputs:
            if grouper is not None:
                result = group_remote(layout, grouper)
                groups, repairs = result.partition.to_lists(), list(result.repairs)
            else:
                groups, repairs = group_heuristic(layout).to_lists(), []
            rows.append({"layout_id": layout.layout_id, "groups": groups, "repairs": repairs})
        s1.write_jsonl("groups.jsonl", rows)
        s1.mark_complete({"layouts_grouped": len(rows)})
    groups_by_layout = {
        row["layout_id"]: row["groups"] for row in s1.read_jsonl("groups.jsonl")
    }
    report.stages[s1.name] = s1.counts()

    # Stage 2: candidate generation per variant
    s2 = _Stage(out_root, "stage2_generation", config_hash)
    if s2.is_complete():
        report.resumed_stages.append(s2.name)
    else:
        if cfg.generator_url:
            generator = HttpGeneratorClient(HttpEndpoint(cfg.generator_url))
        elif cfg.stub_generator:
            generator = StubGenerator(seed=cfg.seed)
        else:
            raise PipelineError(
                "no generator endpoint configured and stub generator disabled; "
                "halting at the prediction stage"
            )
        candidate_rows = []
        dropped = 0
        for layout in inputs:
            payloads = group_payloads(layout, groups_by_layout[layout.layout_id])
            for variant_name in cfg.variants:
                variant = VariantKind(variant_name)
                request = GeneratorRequest(
                    groups=tuple(payloads),
                    target_canvas=apply_variant(layout.canvas, variant),
                    num_samples=cfg.num_samples,
                )
                result = fetch_candidates(request, generator)
                dropped += result.dropped
                for i, candidate in enumerate(result.layouts):
                    tagged = replace(
                        candidate,
                        layout_id=f"{layout.layout_id}__{variant.value}__s{i}",
                        variant=variant,
                        extra={**candidate.extra, "source_design": layout.layout_id},
                    )
                    candidate_rows.append(layout_to_dict(tagged))
        s2.write_jsonl("candidates.jsonl", candidate_rows)
        s2.mark_complete({"candidates": len(candidate_rows), "dropped": dropped})
    candidates = [layout_from_dict(row) for row in s2.read_jsonl("candidates.jsonl")]
    report.stages[s2.name] = s2.counts()

    # Stage 3: filtering
    s3 = _Stage(out_root, "stage3_filtering", config_hash)
    if s3.is_complete():
        report.resumed_stages.append(s3.name)
    else:
        gate = heuristic_gate(
            score_threshold=cfg.filter_threshold,
            overlap_budget=cfg.filter_overlap_budget,
        )
        result = filter_low_quality(candidates, gate)
        s3.write_jsonl("kept.jsonl", [layout_to_dict(l) for l in result.kept])
        s3.write_jsonl(
            "discarded.jsonl",
            [
                {"layout_id": l.layout_id, "reasons": list(reasons)}
                for l, reasons in result.discarded
            ],
        )
        s3.mark_complete({"kept": len(result.kept), "discarded": len(result.discarded)})
    kept = [layout_from_dict(row) for row in s3.read_jsonl("kept.jsonl")]
    report.stages[s3.name] = s3.counts()

    # Stage 4: clustering and representative selection
    s4 = _Stage(out_root, "stage4_clustering", config_hash)
    if s4.is_complete():
        report.resumed_stages.append(s4.name)
    else:
        buckets: dict[tuple[str, str], list[Layout]] = {}
        for layout in kept:
            key = (layout.extra.get("source_design", ""), layout.variant.value)
            buckets.setdefault(key, []).append(layout)
        selected_rows = []
        for key in sorted(buckets):
            pool = sorted(buckets[key], key=lambda l: l.layout_id)
            chosen = select_distinct(
                pool,
                k=min(cfg.top_k_distinct, len(pool)),
                tau_sim=cfg.tau_sim,
                method=SelectionMethod(cfg.selection_method),
            )
            by_id = {l.layout_id: l for l in pool}
            selected_rows.extend(layout_to_dict(by_id[i]) for i in sorted(chosen))
        s4.write_jsonl("selected.jsonl", selected_rows)
        s4.mark_complete({"selected": len(selected_rows), "buckets": len(buckets)})
    selected = [layout_from_dict(row) for row in s4.read_jsonl("selected.jsonl")]
    report.stages[s4.name] = s4.counts()

    # Stage 5: refinement
    s5 = _Stage(out_root, "stage5_refinement", config_hash)
    if s5.is_complete():
        report.resumed_stages.append(s5.name)
    else:
        refine_cfg = RefineConfig(
            snap_tolerance=cfg.snap_tolerance, max_iterations=cfg.max_refine_iterations
        )
        refiner = (
            HttpRefinerClient(HttpEndpoint(cfg.refiner_url)) if cfg.refiner_url else None
        )
        refined_rows = []
        n_converged = 0
        for layout in selected:
            if refiner is not None:
                refined = refine_remote(layout, refiner, refine_cfg).layout
                n_converged += 1
            else:
                result = refine_layout(layout, refine_cfg)
                refined = result.layout
                n_converged += int(result.converged)
            refined = replace(refined, layout_id=layout.layout_id, extra=dict(layout.extra))
            refined_rows.append(layout_to_dict(refined))
        s5.write_jsonl("refined.jsonl", refined_rows)
        s5.mark_complete({"refined": len(refined_rows), "converged": n_converged})
    refined = [layout_from_dict(row) for row in s5.read_jsonl("refined.jsonl")]
    report.stages[s5.name] = s5.counts()

    # Stage 6: diversity sampling and pair emission
    s6 = _Stage(out_root, "stage6_sampling", config_hash)
    dataset_dir = out_root / "dataset"
    if s6.is_complete():
        report.resumed_stages.append(s6.name)
    else:
        pools: dict[VariantKind, list[Layout]] = {}
        for layout in refined:
            pools.setdefault(layout.variant, []).append(layout)
        embedder = (
            remote_embedder(HttpEmbedderClient(HttpEndpoint(cfg.embedder_url)))
            if cfg.embedder_url
            else embed_geometric
        )
        result = sample_diverse_pairs(
            pools,
            quotas=quotas_for_total(cfg.total_pairs),
            embedder=embedder,
            max_reuse=cfg.max_reuse,
            seed=cfg.seed,
            design_key=lambda l: l.extra.get("source_design", ""),
        )
        layouts: dict[str, Layout] = {}
        for pair in result.pairs:
            layouts[pair.left.layout_id] = pair.left
            layouts[pair.right.layout_id] = pair.right
        provenance_counts = {"variant": {}, "source": {}}
        for pair in result.pairs:
            v = pair.left.variant.value
            provenance_counts["variant"][v] = provenance_counts["variant"].get(v, 0) + 1
            s = pair.left.source.value
            provenance_counts["source"][s] = provenance_counts["source"].get(s, 0) + 1
        manifest = DatasetManifest(
            pair_ids=tuple(p.pair_id for p in result.pairs),
            provenance_counts=provenance_counts,
            extra={"shortfalls": {k.value: v for k, v in result.shortfalls.items()}},
        )
        save_dataset(dataset_dir, Dataset(
            layouts=layouts,
            pairs=list(result.pairs),
            manifest=manifest,
            groups={
                lid: groups_by_layout[lid]
                for lid in sorted(groups_by_layout)
            },
        ))
        s6.mark_complete(
            {
                "pairs": len(result.pairs),
                "shortfall": sum(result.shortfalls.values()),
            }
        )
    report.stages[s6.name] = s6.counts()

    atomic_write_text(out_root / "run_report.json", canonical_json(report.to_dict()) + "\n")
    return report
