from __future__ import annotations

import threading

import pytest
from fastapi.testclient import TestClient

from layoutpref.dataset import Dataset, DatasetManifest, save_dataset
from layoutpref.metrics import agreement_rates
from layoutpref.pairs import PreferenceLabel, PreferencePair
from layoutpref.service import AnnotationService, SubmissionError, create_app

from conftest import make_layout

L, R = PreferenceLabel.LEFT, PreferenceLabel.RIGHT


class FakeClock:
    def __init__(self, start=1000.0):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, seconds):
        self.now += seconds


def seed_dataset(path, n_pairs=3):
    layouts = {}
    pairs = []
    for i in range(n_pairs):
        left = make_layout([(0.1, 0.1, 0.2, 0.2)], layout_id=f"p{i}_l")
        right = make_layout([(0.6, 0.6, 0.2, 0.2)], layout_id=f"p{i}_r")
        layouts[left.layout_id] = left
        layouts[right.layout_id] = right
        pairs.append(PreferencePair(pair_id=f"pair{i}", left=left, right=right))
    ds = Dataset(
        layouts=layouts,
        pairs=pairs,
        manifest=DatasetManifest(pair_ids=tuple(p.pair_id for p in pairs)),
    )
    save_dataset(path, ds)
    return path


class TestTaskQueue:
    def test_oldest_open_task_first(self, tmp_path):
        service = AnnotationService(seed_dataset(tmp_path / "d"), clock=FakeClock())
        task = service.next_task("alice")
        assert task.pair_id == "pair0"
        assert task.assigned_to == "alice"

    def test_annotator_never_sees_own_labeled_pair(self, tmp_path):
        service = AnnotationService(seed_dataset(tmp_path / "d"), clock=FakeClock())
        for expected in ("pair0", "pair1", "pair2"):
            task = service.next_task("alice")
            assert task.pair_id == expected
            service.submit_label(task.task_id, "alice", "left")
        assert service.next_task("alice") is None

    def test_lease_blocks_other_annotators_at_redundancy_one(self, tmp_path):
        service = AnnotationService(seed_dataset(tmp_path / "d"), clock=FakeClock())
        a = service.next_task("alice")
        b = service.next_task("bob")
        assert a.pair_id != b.pair_id

    def test_redundancy_allows_multiple_annotators(self, tmp_path):
        service = AnnotationService(
            seed_dataset(tmp_path / "d"), redundancy=2, clock=FakeClock()
        )
        a = service.next_task("alice")
        b = service.next_task("bob")
        assert a.pair_id == b.pair_id == "pair0"
        c = service.next_task("carol")
        assert c.pair_id == "pair1"

    def test_expired_lease_reissued(self, tmp_path):
        clock = FakeClock()
        service = AnnotationService(
            seed_dataset(tmp_path / "d", n_pairs=1), lease_seconds=600, clock=clock
        )
        stale = service.next_task("alice")
        assert service.next_task("bob") is None
        clock.advance(601)
        reissued = service.next_task("bob")
        assert reissued.pair_id == stale.pair_id

    def test_repeated_request_returns_same_lease(self, tmp_path):
        service = AnnotationService(seed_dataset(tmp_path / "d"), clock=FakeClock())
        first = service.next_task("alice")
        second = service.next_task("alice")
        assert first.task_id == second.task_id


class TestSubmitLabel:
    def test_valid_submission_persists(self, tmp_path):
        path = seed_dataset(tmp_path / "d")
        service = AnnotationService(path, clock=FakeClock())
        task = service.next_task("alice")
        record = service.submit_label(task.task_id, "alice", "left")
        assert record.label is L
        restarted = AnnotationService(path, clock=FakeClock())
        records, _ = restarted.export()
        assert len(records) == 1
        assert records[0].pair_id == task.pair_id

    def test_duplicate_identical_submission_is_idempotent(self, tmp_path):
        service = AnnotationService(seed_dataset(tmp_path / "d"), clock=FakeClock())
        task = service.next_task("alice")
        first = service.submit_label(task.task_id, "alice", "left")
        again = service.submit_label(task.task_id, "alice", "left")
        assert first == again
        records, _ = service.export()
        assert len(records) == 1

    def test_invalid_label_rejected(self, tmp_path):
        service = AnnotationService(seed_dataset(tmp_path / "d"), clock=FakeClock())
        task = service.next_task("alice")
        with pytest.raises(SubmissionError, match="maybe"):
            service.submit_label(task.task_id, "alice", "maybe")

    def test_wrong_annotator_rejected(self, tmp_path):
        service = AnnotationService(seed_dataset(tmp_path / "d"), clock=FakeClock())
        task = service.next_task("alice")
        with pytest.raises(SubmissionError, match="different annotator"):
            service.submit_label(task.task_id, "bob", "left")

    def test_expired_lease_rejected(self, tmp_path):
        clock = FakeClock()
        service = AnnotationService(seed_dataset(tmp_path / "d"), clock=clock)
        task = service.next_task("alice")
        clock.advance(601)
        with pytest.raises(SubmissionError, match="expired|no active lease"):
            service.submit_label(task.task_id, "alice", "left")

    def test_concurrent_leasing_hands_out_distinct_pairs(self, tmp_path):
        service = AnnotationService(seed_dataset(tmp_path / "d", n_pairs=8), clock=FakeClock())
        results = []

        def worker(name):
            task = service.next_task(name)
            results.append((name, task.pair_id))

        threads = [threading.Thread(target=worker, args=(f"w{i}",)) for i in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        pair_ids = [p for _, p in results]
        assert len(set(pair_ids)) == 8


class TestExport:
    def test_unanimous_agreement(self, tmp_path):
        service = AnnotationService(
            seed_dataset(tmp_path / "d"), redundancy=2, clock=FakeClock()
        )
        for annotator in ("alice", "bob"):
            while (task := service.next_task(annotator)) is not None:
                service.submit_label(task.task_id, annotator, "left")
        records, summary = service.export()
        assert len(records) == 6
        assert summary.four_class == 1.0
        assert summary.binary == 1.0

    def test_disagreement_matches_metrics_module(self, tmp_path):
        service = AnnotationService(
            seed_dataset(tmp_path / "d"), redundancy=2, clock=FakeClock()
        )
        script = {"alice": ["left", "left", "both_good"], "bob": ["right", "left", "both_good"]}
        for annotator, labels in script.items():
            for label in labels:
                task = service.next_task(annotator)
                service.submit_label(task.task_id, annotator, label)
        _, summary = service.export()
        expected = agreement_rates(
            [[L, R], [L, L], [PreferenceLabel.BOTH_GOOD, PreferenceLabel.BOTH_GOOD]]
        )
        assert summary == expected

    def test_empty_store(self, tmp_path):
        service = AnnotationService(seed_dataset(tmp_path / "d"), clock=FakeClock())
        records, summary = service.export()
        assert records == []
        assert summary is None


class TestRestApi:
    def _client(self, tmp_path, **kwargs):
        service = AnnotationService(seed_dataset(tmp_path / "d"), clock=FakeClock(), **kwargs)
        return TestClient(create_app(service))

    def test_task_label_progress_cycle(self, tmp_path):
        client = self._client(tmp_path)
        task = client.get("/api/task", params={"annotator": "alice"}).json()["task"]
        assert task["pair_id"] == "pair0"
        ack = client.post(
            "/api/label",
            json={"task_id": task["task_id"], "annotator_id": "alice", "label": "left"},
        ).json()
        assert ack["ok"] is True
        progress = client.get("/api/progress", params={"annotator": "alice"}).json()
        assert progress["total_records"] == 1
        assert progress["annotator_labeled"] == 1

    def test_rejection_payload(self, tmp_path):
        client = self._client(tmp_path)
        task = client.get("/api/task", params={"annotator": "alice"}).json()["task"]
        response = client.post(
            "/api/label",
            json={"task_id": task["task_id"], "annotator_id": "alice", "label": "maybe"},
        )
        assert response.status_code == 409
        assert "maybe" in response.json()["reason"]

    def test_render_endpoint_serves_svg(self, tmp_path):
        client = self._client(tmp_path)
        response = client.get("/api/pair/pair0/render")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("image/svg+xml")
        assert response.text.startswith("<svg")
        assert client.get("/api/pair/nope/render").status_code == 404

    def test_empty_queue_returns_null_task(self, tmp_path):
        client = self._client(tmp_path)
        for _ in range(3):
            task = client.get("/api/task", params={"annotator": "a"}).json()["task"]
            client.post(
                "/api/label",
                json={"task_id": task["task_id"], "annotator_id": "a", "label": "both_bad"},
            )
        assert client.get("/api/task", params={"annotator": "a"}).json()["task"] is None

    def test_export_endpoint(self, tmp_path):
        client = self._client(tmp_path)
        task = client.get("/api/task", params={"annotator": "alice"}).json()["task"]
        client.post(
            "/api/label",
            json={"task_id": task["task_id"], "annotator_id": "alice", "label": "right"},
        )
        payload = client.get("/api/export").json()
        assert len(payload["records"]) == 1
        assert payload["records"][0]["label"] == "right"
        assert payload["agreement"] is None
