"""Command-line interface for the layout preference toolkit."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .augment import (
    NegativePairMode,
    PerturbationConfig,
    apply_variant,
    make_negative_pairs,
    perturb_layout,
)
from .core import Canvas, Layout, VariantKind, layout_from_dict, layout_to_dict
from .dataset import (
    Dataset,
    DatasetManifest,
    load_dataset,
    save_dataset,
    split,
    stats_report,
)
from .diversity import (
    VARIANT_ORDER,
    cluster_layouts,
    quotas_for_total,
    sample_diverse_pairs,
)
from .judge import debias as debias_judge
from .judge import judge_pair_heuristic, judge_pair_remote
from .metrics import evaluate
from .pairs import PreferenceLabel, PreferencePair
from .rank import ScalingSample, best_of_n, scaling_eval
from .refine import HprRecord, RefineConfig, hpr, refine_layout
from .render import RenderStyle, render_pair, render_svg
from .util import canonical_json


def _read_layout(path: str) -> Layout:
    return layout_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _read_layout_dir(path: str) -> list[Layout]:
    layouts = [
        layout_from_dict(json.loads(p.read_text(encoding="utf-8")))
        for p in sorted(Path(path).glob("*.json"))
    ]
    if not layouts:
        raise click.ClickException(f"no layout json files in {path!r}")
    return layouts


def _write_json(path: str | None, obj) -> None:
    text = canonical_json(obj) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


@click.group()
def main() -> None:
    """Curation, judging, and evaluation tools for layout preference data."""


# --- augment -----------------------------------------------------------------


@main.group()
def augment() -> None:
    """Aspect-ratio variants and perturbation augmentation."""


@augment.command("variant")
@click.option("--kind", type=click.Choice([v.value for v in VariantKind]), required=True)
@click.option("--width", type=int, required=True)
@click.option("--height", type=int, required=True)
def augment_variant(kind: str, width: int, height: int) -> None:
    canvas = apply_variant(Canvas(width, height), VariantKind(kind))
    _write_json(None, {"width_px": canvas.width_px, "height_px": canvas.height_px})


@augment.command("perturb")
@click.argument("layout_file")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--fraction", type=float, default=0.7, show_default=True)
@click.option("-o", "--out", default=None, help="Output file (stdout if omitted).")
def augment_perturb(layout_file: str, seed: int, fraction: float, out: str | None) -> None:
    cfg = PerturbationConfig(element_fraction=fraction, seed=seed)
    perturbed = perturb_layout(_read_layout(layout_file), cfg)
    _write_json(out, layout_to_dict(perturbed))


@augment.command("negatives")
@click.argument("layout_dir")
@click.option(
    "--mode",
    type=click.Choice([m.value for m in NegativePairMode]),
    default=NegativePairMode.ORIGINAL_VS_PERTURBED.value,
    show_default=True,
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--out", required=True, help="Output dataset directory.")
def augment_negatives(layout_dir: str, mode: str, seed: int, out: str) -> None:
    originals = _read_layout_dir(layout_dir)
    pairs = make_negative_pairs(
        originals, PerturbationConfig(seed=seed), NegativePairMode(mode)
    )
    layouts = {}
    for p in pairs:
        layouts[p.left.layout_id] = p.left
        layouts[p.right.layout_id] = p.right
    manifest = DatasetManifest(pair_ids=tuple(p.pair_id for p in pairs))
    save_dataset(out, Dataset(layouts=layouts, pairs=pairs, manifest=manifest))
    click.echo(f"wrote {len(pairs)} negative pairs to {out}")


# --- diversity -----------------------------------------------------------------


@main.group()
def diversity() -> None:
    """Similarity clustering and diversity sampling."""


@diversity.command("cluster")
@click.argument("layout_dir")
@click.option("--tau", type=float, default=0.6, show_default=True)
def diversity_cluster(layout_dir: str, tau: float) -> None:
    pool = _read_layout_dir(layout_dir)
    cs = cluster_layouts(pool, tau_sim=tau)
    _write_json(
        None,
        {
            "clusters": [sorted(c) for c in cs.clusters],
            "representatives": list(cs.representatives),
        },
    )


def _parse_ratio(text: str) -> dict[VariantKind, int]:
    parts = [int(p) for p in text.split(":")]
    if len(parts) != 3:
        raise click.ClickException("ratio must look like 4:4:2")
    return dict(zip(VARIANT_ORDER, parts))


@diversity.command("sample")
@click.argument("layout_dir")
@click.option("--total", type=int, required=True)
@click.option("--ratio", default="4:4:2", show_default=True)
@click.option("--max-reuse", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--out", required=True, help="Output dataset directory.")
def diversity_sample(
    layout_dir: str, total: int, ratio: str, max_reuse: int, seed: int, out: str
) -> None:
    pool = _read_layout_dir(layout_dir)
    pools: dict[VariantKind, list[Layout]] = {}
    for layout in pool:
        pools.setdefault(layout.variant, []).append(layout)
    quotas = quotas_for_total(total, _parse_ratio(ratio))
    result = sample_diverse_pairs(pools, quotas, max_reuse=max_reuse, seed=seed)
    layouts = {}
    for p in result.pairs:
        layouts[p.left.layout_id] = p.left
        layouts[p.right.layout_id] = p.right
    manifest = DatasetManifest(
        pair_ids=tuple(p.pair_id for p in result.pairs),
        extra={"shortfalls": {k.value: v for k, v in result.shortfalls.items()}},
    )
    save_dataset(out, Dataset(layouts=layouts, pairs=list(result.pairs), manifest=manifest))
    shortfall = sum(result.shortfalls.values())
    click.echo(f"wrote {len(result.pairs)} pairs to {out} (shortfall {shortfall})")


# --- refine -----------------------------------------------------------------


@main.group()
def refine() -> None:
    """Deterministic layout refinement and the HPR metric."""


@refine.command("run")
@click.argument("layout_file")
@click.option("--snap", type=float, default=0.01, show_default=True)
@click.option("--max-iter", type=int, default=200, show_default=True)
@click.option("-o", "--out", default=None)
def refine_run(layout_file: str, snap: float, max_iter: int, out: str | None) -> None:
    cfg = RefineConfig(snap_tolerance=snap, max_iterations=max_iter)
    result = refine_layout(_read_layout(layout_file), cfg)
    _write_json(out, layout_to_dict(result.layout))
    if not result.converged:
        click.echo("warning: refinement did not converge", err=True)


@refine.command("hpr")
@click.option("--records", "records_file", required=True)
def refine_hpr(records_file: str) -> None:
    records = []
    for line in Path(records_file).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        records.append(
            HprRecord(
                refined_side=PreferenceLabel(obj["refined"]),
                preferred_side=PreferenceLabel(obj["preferred"]),
            )
        )
    ratio = hpr(records)
    click.echo("refined always preferred" if ratio == float("inf") else f"{ratio:.4f}")


# --- judge -----------------------------------------------------------------


def _load_pairs_dataset(dataset_dir: str) -> Dataset:
    ds = load_dataset(dataset_dir)
    if not ds.pairs:
        raise click.ClickException(f"no pairs in dataset {dataset_dir!r}")
    return ds


@main.group()
def judge() -> None:
    """Run a judge over a pair dataset."""


@judge.command("run")
@click.argument("dataset_dir")
@click.option("--engine", type=click.Choice(["heuristic", "remote"]), default="heuristic")
@click.option("--endpoint", default=None, help="Judge endpoint URL (remote engine).")
@click.option("--debias/--no-debias", "use_debias", default=False, show_default=True)
@click.option("-o", "--out", default=None, help="Verdicts JSONL output.")
def judge_run(
    dataset_dir: str, engine: str, endpoint: str | None, use_debias: bool, out: str | None
) -> None:
    ds = _load_pairs_dataset(dataset_dir)
    if engine == "remote":
        if not endpoint:
            raise click.ClickException("--endpoint required with --engine remote")
        from .clients import HttpEndpoint, HttpJudgeClient

        client = HttpJudgeClient(HttpEndpoint(endpoint))

        def inner(pair: PreferencePair):
            return judge_pair_remote(pair, client)

    else:
        inner = judge_pair_heuristic

    lines = []
    for pair in ds.pairs:
        verdict = debias_judge(pair, inner) if use_debias else inner(pair)
        lines.append(
            canonical_json(
                {
                    "pair_id": pair.pair_id,
                    "label": verdict.label.value,
                    "left_score": verdict.left_score,
                    "right_score": verdict.right_score,
                    "debiased": verdict.debiased,
                }
            )
        )
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


# --- metrics -----------------------------------------------------------------


@main.group()
def metrics() -> None:
    """Evaluation metrics over judged datasets."""


def _read_labels(path: str) -> list[PreferenceLabel]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [PreferenceLabel(v) for v in data]


@metrics.command("eval")
@click.option("--preds", required=True, help="JSON list of predicted labels.")
@click.option("--golds", required=True, help="JSON list of gold labels.")
@click.option("--fixed-classes", is_flag=True, default=False)
@click.option("--json-out", default=None)
def metrics_eval(preds: str, golds: str, fixed_classes: bool, json_out: str | None) -> None:
    report = evaluate(_read_labels(preds), _read_labels(golds), fixed_classes=fixed_classes)
    click.echo(report.to_table())
    if json_out:
        Path(json_out).write_text(report.to_json() + "\n", encoding="utf-8")


# --- rank -----------------------------------------------------------------


@main.group()
def rank() -> None:
    """Best-of-N tournaments and scaling evaluation."""


@rank.command("best-of-n")
@click.option("--candidates", "candidates_dir", required=True)
@click.option("--judge", "engine", type=click.Choice(["heuristic"]), default="heuristic")
@click.option("--dump", "dump_file", default=None, help="Write the tournament audit JSON.")
def rank_best_of_n(candidates_dir: str, engine: str, dump_file: str | None) -> None:
    from .rank import rank_candidates, run_tournament, tournament_to_dict

    cands = _read_layout_dir(candidates_dir)
    if len(cands) == 1:
        click.echo(cands[0].layout_id)
        return
    tournament = run_tournament(cands, judge_pair_heuristic)
    if dump_file:
        Path(dump_file).write_text(
            canonical_json(tournament_to_dict(tournament)) + "\n", encoding="utf-8"
        )
    click.echo(rank_candidates(cands, tournament)[0].layout_id)


@rank.command("scaling-eval")
@click.option("--samples", "samples_file", required=True, help="Manifest JSON.")
@click.option("--selection-judge", type=click.Choice(["heuristic"]), default="heuristic")
@click.option("--referee-judge", type=click.Choice(["heuristic"]), default="heuristic")
def rank_scaling_eval(samples_file: str, selection_judge: str, referee_judge: str) -> None:
    manifest = json.loads(Path(samples_file).read_text(encoding="utf-8"))
    base = Path(samples_file).parent
    samples = []
    for entry in manifest["samples"]:
        cands = tuple(_read_layout(str(base / p)) for p in entry["candidates"])
        reference = _read_layout(str(base / entry["reference"]))
        samples.append(ScalingSample(candidates=cands, reference=reference))
    report = scaling_eval(samples, judge_pair_heuristic, judge_pair_heuristic)
    _write_json(
        None,
        {
            "baseline_win_rate": report.baseline_win_rate,
            "scaled_win_rate": report.scaled_win_rate,
            "delta": report.delta,
            "n_samples": report.n_samples,
        },
    )


# --- dataset -----------------------------------------------------------------


@main.group()
def dataset() -> None:
    """Dataset splits and statistics."""


@dataset.command("split")
@click.argument("dataset_dir")
@click.option("--ratio", default="8735:500:1000", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--stratified", is_flag=True, default=False)
def dataset_split(dataset_dir: str, ratio: str, seed: int, stratified: bool) -> None:
    ds = _load_pairs_dataset(dataset_dir)
    parts = tuple(float(p) for p in ratio.split(":"))
    if len(parts) != 3:
        raise click.ClickException("ratio must look like 8735:500:1000")
    assignment = split(ds.pairs, ratios=parts, seed=seed, stratified=stratified)
    manifest = DatasetManifest(
        pair_ids=ds.manifest.pair_ids,
        split_assignment=assignment,
        provenance_counts=ds.manifest.provenance_counts,
        extra=ds.manifest.extra,
    )
    save_dataset(dataset_dir, Dataset(
        layouts=ds.layouts,
        pairs=ds.pairs,
        manifest=manifest,
        annotations=ds.annotations,
        groups=ds.groups,
    ))
    sizes = {name: 0 for name in ("train", "val", "test")}
    for v in assignment.values():
        sizes[v] += 1
    click.echo(canonical_json(sizes))


@dataset.command("stats")
@click.argument("dataset_dir")
@click.option("--out", "out_dir", required=True)
def dataset_stats(dataset_dir: str, out_dir: str) -> None:
    ds = load_dataset(dataset_dir)
    report = stats_report(ds)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "stats.json").write_text(canonical_json(report.to_dict()) + "\n", encoding="utf-8")
    for name, content in report.to_csvs().items():
        (out / name).write_text(content, encoding="utf-8")
    click.echo(f"wrote stats to {out_dir}")


# --- render -----------------------------------------------------------------


@main.group()
def render() -> None:
    """Deterministic SVG rendering."""


@render.command("layout")
@click.argument("layout_file")
@click.option("--labels/--no-labels", default=False)
@click.option("-o", "--out", required=True)
def render_layout_cmd(layout_file: str, labels: bool, out: str) -> None:
    svg = render_svg(_read_layout(layout_file), RenderStyle(show_labels=labels))
    Path(out).write_text(svg, encoding="utf-8")


@render.command("pair")
@click.argument("dataset_dir")
@click.argument("pair_id")
@click.option("-o", "--out", required=True)
def render_pair_cmd(dataset_dir: str, pair_id: str, out: str) -> None:
    ds = _load_pairs_dataset(dataset_dir)
    try:
        pair = ds.pair(pair_id)
    except KeyError:
        raise click.ClickException(f"unknown pair {pair_id!r}")
    Path(out).write_text(render_pair(pair), encoding="utf-8")


# --- pipeline / serve ---------------------------------------------------------


@main.group()
def pipeline() -> None:
    """End-to-end curation pipeline."""


@pipeline.command("run")
@click.option("--config", "config_file", required=True)
def pipeline_run(config_file: str) -> None:
    from .pipeline import load_config, run_pipeline

    report = run_pipeline(load_config(config_file))
    click.echo(canonical_json(report.to_dict()))


@main.command("serve")
@click.option("--dataset", "dataset_dir", required=True)
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--redundancy", type=int, default=1, show_default=True)
@click.option("--static-dir", default=None, help="UI bundle directory to serve.")
def serve(dataset_dir: str, port: int, redundancy: int, static_dir: str | None) -> None:
    import uvicorn

    from .service import AnnotationService, create_app

    service = AnnotationService(dataset_dir, redundancy=redundancy)
    app = create_app(service, static_dir=static_dir)
    uvicorn.run(app, host="127.0.0.1", port=port)


if __name__ == "__main__":
    sys.exit(main())
