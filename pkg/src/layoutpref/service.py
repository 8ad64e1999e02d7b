"""Annotation task queue and REST service backing the labeling UI.

Tasks are leased per (pair, annotator) with a timeout; the record store is
append-only JSONL, so restarts lose nothing and each (pair, annotator) has
at most one record.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .dataset import AnnotationRecord, load_dataset
from .metrics import AgreementRates, MetricsError, agreement_rates
from .pairs import PreferenceLabel
from .render import RenderStyle, render_pair
from .util import canonical_json

DEFAULT_LEASE_SECONDS = 600.0


class TaskState(str, Enum):
    OPEN = "open"
    ASSIGNED = "assigned"
    DONE = "done"


@dataclass(frozen=True)
class AnnotationTask:
    task_id: str
    pair_id: str
    assigned_to: str
    state: TaskState
    lease_expiry: float


class SubmissionError(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class _Lease:
    pair_id: str
    annotator_id: str
    expiry: float


class AnnotationService:
    """Lease-based task queue over one dataset directory.

    redundancy is how many distinct annotators each pair needs. Leasing is
    atomic under one lock; the clock is injectable for tests.
    """

    def __init__(
        self,
        dataset_dir: str | Path,
        redundancy: int = 1,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        clock=time.time,
    ):
        if redundancy < 1:
            raise ValueError("redundancy must be >= 1")
        self._dir = Path(dataset_dir)
        self._dataset = load_dataset(self._dir)
        if not self._dataset.pairs:
            raise ValueError(f"no pairs in dataset {dataset_dir!r}")
        self._redundancy = redundancy
        self._lease_seconds = lease_seconds
        self._clock = clock
        self._lock = threading.Lock()
        self._records: list[AnnotationRecord] = list(self._dataset.annotations)
        self._leases: dict[str, _Lease] = {}
        self._annotations_path = self._dir / "annotations.jsonl"

    # -- internals ------------------------------------------------------------

    def _labeled_by(self, pair_id: str) -> set[str]:
        return {r.annotator_id for r in self._records if r.pair_id == pair_id}

    def _prune_expired(self, now: float) -> None:
        expired = [tid for tid, lease in self._leases.items() if lease.expiry <= now]
        for tid in expired:
            del self._leases[tid]

    def _task_id(self, pair_id: str, annotator_id: str) -> str:
        return f"t::{pair_id}::{annotator_id}"

    def _append_record(self, record: AnnotationRecord) -> None:
        self._records.append(record)
        with open(self._annotations_path, "a", encoding="utf-8") as fh:
            fh.write(canonical_json(record.to_dict()) + "\n")
            fh.flush()

    # -- queue API --------------------------------------------------------------

    def next_task(self, annotator_id: str) -> AnnotationTask | None:
        """Lease the oldest open pair this annotator has not labeled."""
        if not annotator_id:
            raise SubmissionError("annotator id required")
        with self._lock:
            now = self._clock()
            self._prune_expired(now)
            for tid, lease in self._leases.items():
                if lease.annotator_id == annotator_id:
                    return AnnotationTask(
                        task_id=tid,
                        pair_id=lease.pair_id,
                        assigned_to=annotator_id,
                        state=TaskState.ASSIGNED,
                        lease_expiry=lease.expiry,
                    )
            for pair in self._dataset.pairs:
                labeled = self._labeled_by(pair.pair_id)
                if annotator_id in labeled:
                    continue
                active = [
                    l for l in self._leases.values() if l.pair_id == pair.pair_id
                ]
                if len(labeled) + len(active) >= self._redundancy:
                    continue
                task_id = self._task_id(pair.pair_id, annotator_id)
                expiry = now + self._lease_seconds
                self._leases[task_id] = _Lease(
                    pair_id=pair.pair_id, annotator_id=annotator_id, expiry=expiry
                )
                return AnnotationTask(
                    task_id=task_id,
                    pair_id=pair.pair_id,
                    assigned_to=annotator_id,
                    state=TaskState.ASSIGNED,
                    lease_expiry=expiry,
                )
            return None

    def submit_label(
        self, task_id: str, annotator_id: str, label: str, duration_ms: int | None = None
    ) -> AnnotationRecord:
        """Record a label for a leased task; idempotent on exact duplicates."""
        try:
            parsed = PreferenceLabel(label)
        except ValueError:
            raise SubmissionError(f"invalid label {label!r}") from None
        with self._lock:
            now = self._clock()
            lease = self._leases.get(task_id)
            if lease is None:
                # Idempotency: re-acking an identical already-stored submission.
                for r in self._records:
                    if (
                        task_id == self._task_id(r.pair_id, r.annotator_id)
                        and r.annotator_id == annotator_id
                        and r.label == parsed
                    ):
                        return r
                raise SubmissionError("no active lease for this task (expired or unknown)")
            if lease.annotator_id != annotator_id:
                raise SubmissionError("task is leased to a different annotator")
            if lease.expiry <= now:
                del self._leases[task_id]
                raise SubmissionError("lease expired")
            existing = [
                r
                for r in self._records
                if r.pair_id == lease.pair_id and r.annotator_id == annotator_id
            ]
            if existing:
                del self._leases[task_id]
                if existing[0].label == parsed:
                    return existing[0]
                raise SubmissionError("pair already labeled by this annotator")
            record = AnnotationRecord(
                pair_id=lease.pair_id,
                annotator_id=annotator_id,
                label=parsed,
                timestamp=now,
                duration_ms=duration_ms,
            )
            self._append_record(record)
            del self._leases[task_id]
            return record

    def progress(self, annotator_id: str | None = None) -> dict:
        with self._lock:
            now = self._clock()
            self._prune_expired(now)
            per_pair = {p.pair_id: len(self._labeled_by(p.pair_id)) for p in self._dataset.pairs}
            done_pairs = sum(1 for n in per_pair.values() if n >= self._redundancy)
            out = {
                "total_pairs": len(self._dataset.pairs),
                "redundancy": self._redundancy,
                "total_records": len(self._records),
                "done_pairs": done_pairs,
                "active_leases": len(self._leases),
            }
            if annotator_id is not None:
                labeled = sum(
                    1 for r in self._records if r.annotator_id == annotator_id
                )
                out["annotator_labeled"] = labeled
                out["annotator_remaining"] = len(self._dataset.pairs) - labeled
            return out

    def export(self) -> tuple[list[AnnotationRecord], AgreementRates | None]:
        """All records plus live agreement over multi-annotated pairs."""
        with self._lock:
            by_pair: dict[str, list[PreferenceLabel]] = {}
            for r in self._records:
                by_pair.setdefault(r.pair_id, []).append(r.label)
            multi = [labels for labels in by_pair.values() if len(labels) >= 2]
            summary = None
            if multi:
                try:
                    summary = agreement_rates(multi)
                except MetricsError:
                    summary = None
            return list(self._records), summary

    def render_pair_svg(self, pair_id: str) -> str:
        pair = self._dataset.pair(pair_id)
        return render_pair(pair, RenderStyle())


def create_app(service: AnnotationService, static_dir: str | Path | None = None):
    """FastAPI app exposing the annotation REST API (and the UI bundle)."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import JSONResponse, Response

    app = FastAPI(title="layoutpref annotation service")

    @app.get("/api/task")
    def get_task(annotator: str):
        task = service.next_task(annotator)
        if task is None:
            return {"task": None}
        return {
            "task": {
                "task_id": task.task_id,
                "pair_id": task.pair_id,
                "assigned_to": task.assigned_to,
                "state": task.state.value,
                "lease_expiry": task.lease_expiry,
            }
        }

    @app.post("/api/label")
    def post_label(payload: dict):
        try:
            record = service.submit_label(
                task_id=str(payload.get("task_id", "")),
                annotator_id=str(payload.get("annotator_id", "")),
                label=str(payload.get("label", "")),
                duration_ms=payload.get("duration_ms"),
            )
        except SubmissionError as exc:
            return JSONResponse(status_code=409, content={"ok": False, "reason": exc.reason})
        return {"ok": True, "record": record.to_dict()}

    @app.get("/api/progress")
    def get_progress(annotator: str | None = None):
        return service.progress(annotator)

    @app.get("/api/pair/{pair_id}/render")
    def get_render(pair_id: str):
        try:
            svg = service.render_pair_svg(pair_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id!r}")
        return Response(content=svg, media_type="image/svg+xml")

    @app.get("/api/export")
    def get_export():
        records, summary = service.export()
        return {
            "records": [r.to_dict() for r in records],
            "agreement": (
                None
                if summary is None
                else {
                    "four_class": summary.four_class,
                    "binary": summary.binary,
                    "n_annotator_pairs": summary.n_annotator_pairs,
                }
            ),
        }

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
