import type { AnnotationTask, ApiClient, PreferenceLabel, Progress, SubmitAck } from "./types";

export class HttpApiClient implements ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  async nextTask(annotatorId: string): Promise<AnnotationTask | null> {
    const response = await fetch(
      `${this.baseUrl}/api/task?annotator=${encodeURIComponent(annotatorId)}`,
    );
    if (!response.ok) {
      throw new Error(`task fetch failed (${response.status})`);
    }
    const body = (await response.json()) as { task: AnnotationTask | null };
    return body.task;
  }

  async submitLabel(
    taskId: string,
    annotatorId: string,
    label: PreferenceLabel,
  ): Promise<SubmitAck> {
    const response = await fetch(`${this.baseUrl}/api/label`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ task_id: taskId, annotator_id: annotatorId, label }),
    });
    if (response.status === 409) {
      const body = (await response.json()) as { reason?: string };
      return { ok: false, reason: body.reason ?? "rejected" };
    }
    if (!response.ok) {
      throw new Error(`label submit failed (${response.status})`);
    }
    return { ok: true };
  }

  async progress(annotatorId: string): Promise<Progress> {
    const response = await fetch(
      `${this.baseUrl}/api/progress?annotator=${encodeURIComponent(annotatorId)}`,
    );
    if (!response.ok) {
      throw new Error(`progress fetch failed (${response.status})`);
    }
    return (await response.json()) as Progress;
  }

  pairRenderUrl(pairId: string): string {
    return `${this.baseUrl}/api/pair/${encodeURIComponent(pairId)}/render`;
  }
}
