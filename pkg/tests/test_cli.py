from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from layoutpref.cli import main
from layoutpref.core import layout_from_dict, layout_to_dict
from layoutpref.util import canonical_json

from conftest import grid_layout, make_layout


@pytest.fixture
def runner():
    return CliRunner()


def write_layout(path: Path, layout):
    path.write_text(canonical_json(layout_to_dict(layout)) + "\n", encoding="utf-8")
    return path


def write_layout_dir(path: Path, layouts):
    path.mkdir(parents=True, exist_ok=True)
    for layout in layouts:
        write_layout(path / f"{layout.layout_id}.json", layout)
    return path


class TestAugmentCommands:
    def test_variant(self, runner):
        result = runner.invoke(
            main, ["augment", "variant", "--kind", "stretching_2x", "--width", "1080", "--height", "1920"]
        )
        assert result.exit_code == 0
        assert json.loads(result.output) == {"width_px": 1080, "height_px": 3840}

    def test_perturb_deterministic(self, runner, tmp_path):
        layout_file = write_layout(tmp_path / "l.json", grid_layout())
        a = runner.invoke(main, ["augment", "perturb", str(layout_file), "--seed", "3"])
        b = runner.invoke(main, ["augment", "perturb", str(layout_file), "--seed", "3"])
        assert a.exit_code == 0
        assert a.output == b.output
        layout_from_dict(json.loads(a.output))

    def test_negatives_writes_dataset(self, runner, tmp_path):
        corpus = write_layout_dir(tmp_path / "in", [grid_layout(layout_id=f"g{i}") for i in range(3)])
        out = tmp_path / "out"
        result = runner.invoke(
            main, ["augment", "negatives", str(corpus), "-o", str(out), "--seed", "2"]
        )
        assert result.exit_code == 0
        assert len((out / "pairs.jsonl").read_text().splitlines()) == 3


class TestMetricsCommand:
    def test_eval_table(self, runner, tmp_path):
        preds = tmp_path / "preds.json"
        golds = tmp_path / "golds.json"
        preds.write_text(json.dumps(["left", "right", "left"]))
        golds.write_text(json.dumps(["left", "right", "right"]))
        result = runner.invoke(main, ["metrics", "eval", "--preds", str(preds), "--golds", str(golds)])
        assert result.exit_code == 0
        assert "Accuracy" in result.output
        json_out = tmp_path / "report.json"
        result = runner.invoke(
            main,
            ["metrics", "eval", "--preds", str(preds), "--golds", str(golds), "--json-out", str(json_out)],
        )
        assert result.exit_code == 0
        report = json.loads(json_out.read_text())
        assert report["accuracy"] == pytest.approx(2 / 3)


class TestRefineCommands:
    def test_refine_run(self, runner, tmp_path):
        layout_file = write_layout(
            tmp_path / "l.json", make_layout([(0.1, 0.1, 0.3, 0.3), (0.25, 0.25, 0.3, 0.3)])
        )
        out = tmp_path / "refined.json"
        result = runner.invoke(main, ["refine", "run", str(layout_file), "-o", str(out)])
        assert result.exit_code == 0
        refined = layout_from_dict(json.loads(out.read_text()))
        assert refined.source.value == "refined"

    def test_hpr(self, runner, tmp_path):
        records = tmp_path / "records.jsonl"
        lines = [json.dumps({"refined": "left", "preferred": "left"})] * 3
        lines += [json.dumps({"refined": "left", "preferred": "right"})]
        records.write_text("\n".join(lines) + "\n")
        result = runner.invoke(main, ["refine", "hpr", "--records", str(records)])
        assert result.exit_code == 0
        assert result.output.strip() == "3.0000"


class TestJudgeCommand:
    def test_heuristic_run_over_dataset(self, runner, tmp_path):
        corpus = write_layout_dir(tmp_path / "in", [grid_layout(layout_id=f"g{i}") for i in range(2)])
        dataset_dir = tmp_path / "ds"
        assert runner.invoke(
            main, ["augment", "negatives", str(corpus), "-o", str(dataset_dir)]
        ).exit_code == 0
        verdicts_file = tmp_path / "verdicts.jsonl"
        result = runner.invoke(
            main, ["judge", "run", str(dataset_dir), "--debias", "-o", str(verdicts_file)]
        )
        assert result.exit_code == 0
        verdicts = [json.loads(l) for l in verdicts_file.read_text().splitlines()]
        assert len(verdicts) == 2
        assert all(v["debiased"] for v in verdicts)


class TestDatasetCommands:
    def _dataset(self, runner, tmp_path, n=12):
        corpus = write_layout_dir(
            tmp_path / "in", [grid_layout(layout_id=f"g{i}") for i in range(n)]
        )
        dataset_dir = tmp_path / "ds"
        assert runner.invoke(
            main, ["augment", "negatives", str(corpus), "-o", str(dataset_dir)]
        ).exit_code == 0
        return dataset_dir

    def test_split_writes_assignment(self, runner, tmp_path):
        dataset_dir = self._dataset(runner, tmp_path)
        result = runner.invoke(
            main, ["dataset", "split", str(dataset_dir), "--ratio", "8:2:2", "--seed", "1"]
        )
        assert result.exit_code == 0
        sizes = json.loads(result.output)
        assert sizes == {"train": 8, "val": 2, "test": 2}
        manifest = json.loads((dataset_dir / "manifest.json").read_text())
        assert len(manifest["split_assignment"]) == 12

    def test_stats_outputs(self, runner, tmp_path):
        dataset_dir = self._dataset(runner, tmp_path)
        out = tmp_path / "stats"
        result = runner.invoke(main, ["dataset", "stats", str(dataset_dir), "--out", str(out)])
        assert result.exit_code == 0
        stats = json.loads((out / "stats.json").read_text())
        assert stats["n_pairs"] == 12
        assert (out / "variant_distribution.csv").exists()


class TestRenderCommands:
    def test_render_layout(self, runner, tmp_path):
        layout_file = write_layout(tmp_path / "l.json", grid_layout())
        out = tmp_path / "l.svg"
        result = runner.invoke(main, ["render", "layout", str(layout_file), "-o", str(out)])
        assert result.exit_code == 0
        assert out.read_text().startswith("<svg")


class TestDiversityCommands:
    def test_cluster(self, runner, tmp_path):
        base = grid_layout(layout_id="a")
        near = grid_layout(layout_id="b")
        corpus = write_layout_dir(tmp_path / "in", [base, near])
        result = runner.invoke(main, ["diversity", "cluster", str(corpus), "--tau", "0.6"])
        assert result.exit_code == 0
        clusters = json.loads(result.output)["clusters"]
        assert clusters == [["a", "b"]]


class TestRankCommands:
    def test_best_of_n(self, runner, tmp_path):
        from dataclasses import replace

        from layoutpref.augment import PerturbationConfig, perturb_layout

        clean = grid_layout(layout_id="clean")
        messy = replace(perturb_layout(clean, PerturbationConfig(seed=4)), layout_id="messy")
        corpus = write_layout_dir(tmp_path / "cands", [clean, messy])
        result = runner.invoke(main, ["rank", "best-of-n", "--candidates", str(corpus)])
        assert result.exit_code == 0, result.output
        assert result.output.strip() == "clean"


class TestPipelineCommand:
    def test_run_from_config(self, runner, tmp_path):
        from test_pipeline import write_corpus

        corpus = write_corpus(tmp_path / "corpus")
        config = {
            "input_dir": str(corpus),
            "out_dir": str(tmp_path / "out"),
            "seed": 5,
            "num_samples": 6,
            "total_pairs": 6,
            "stub_generator": True,
        }
        config_file = tmp_path / "config.json"
        config_file.write_text(json.dumps(config))
        result = runner.invoke(main, ["pipeline", "run", "--config", str(config_file)])
        assert result.exit_code == 0, result.output
        report = json.loads(result.output)
        assert report["stages"]["stage6_sampling"]["pairs"] == 6
