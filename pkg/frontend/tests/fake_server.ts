import type {
  AnnotationTask,
  ApiClient,
  PreferenceLabel,
  Progress,
  SubmitAck,
} from "../src/types";

interface StoredRecord {
  pair_id: string;
  annotator_id: string;
  label: PreferenceLabel;
}

/** In-memory double of the annotation service's REST contract. */
export class FakeServer implements ApiClient {
  records: StoredRecord[] = [];
  failNextSubmit = false;
  private leases = new Map<string, { pairId: string; annotator: string }>();

  constructor(
    private readonly pairIds: string[],
    private readonly redundancy = 1,
  ) {}

  private taskId(pairId: string, annotator: string): string {
    return `t::${pairId}::${annotator}`;
  }

  private labeledBy(pairId: string): Set<string> {
    return new Set(
      this.records.filter((r) => r.pair_id === pairId).map((r) => r.annotator_id),
    );
  }

  async nextTask(annotatorId: string): Promise<AnnotationTask | null> {
    for (const [taskId, lease] of this.leases) {
      if (lease.annotator === annotatorId) {
        return {
          task_id: taskId,
          pair_id: lease.pairId,
          assigned_to: annotatorId,
          state: "assigned",
          lease_expiry: Date.now() / 1000 + 600,
        };
      }
    }
    for (const pairId of this.pairIds) {
      const labeled = this.labeledBy(pairId);
      if (labeled.has(annotatorId)) {
        continue;
      }
      const activeLeases = [...this.leases.values()].filter(
        (l) => l.pairId === pairId,
      ).length;
      if (labeled.size + activeLeases >= this.redundancy) {
        continue;
      }
      const taskId = this.taskId(pairId, annotatorId);
      this.leases.set(taskId, { pairId, annotator: annotatorId });
      return {
        task_id: taskId,
        pair_id: pairId,
        assigned_to: annotatorId,
        state: "assigned",
        lease_expiry: Date.now() / 1000 + 600,
      };
    }
    return null;
  }

  async submitLabel(
    taskId: string,
    annotatorId: string,
    label: PreferenceLabel,
  ): Promise<SubmitAck> {
    if (this.failNextSubmit) {
      this.failNextSubmit = false;
      throw new Error("network down");
    }
    const lease = this.leases.get(taskId);
    if (lease === undefined) {
      return { ok: false, reason: "no active lease for this task (expired or unknown)" };
    }
    if (lease.annotator !== annotatorId) {
      return { ok: false, reason: "task is leased to a different annotator" };
    }
    const existing = this.records.find(
      (r) => r.pair_id === lease.pairId && r.annotator_id === annotatorId,
    );
    this.leases.delete(taskId);
    if (existing !== undefined) {
      if (existing.label === label) {
        return { ok: true };
      }
      return { ok: false, reason: "pair already labeled by this annotator" };
    }
    this.records.push({ pair_id: lease.pairId, annotator_id: annotatorId, label });
    return { ok: true };
  }

  async progress(annotatorId: string): Promise<Progress> {
    const labeled = this.records.filter((r) => r.annotator_id === annotatorId).length;
    const donePairs = this.pairIds.filter(
      (p) => this.labeledBy(p).size >= this.redundancy,
    ).length;
    return {
      total_pairs: this.pairIds.length,
      redundancy: this.redundancy,
      total_records: this.records.length,
      done_pairs: donePairs,
      annotator_labeled: labeled,
      annotator_remaining: this.pairIds.length - labeled,
    };
  }

  pairRenderUrl(pairId: string): string {
    return `/api/pair/${pairId}/render`;
  }

  expireLease(taskId: string): void {
    this.leases.delete(taskId);
  }
}
