export type PreferenceLabel = "left" | "right" | "both_good" | "both_bad";

export interface AnnotationTask {
  task_id: string;
  pair_id: string;
  assigned_to: string;
  state: string;
  lease_expiry: number;
}

export interface Progress {
  total_pairs: number;
  redundancy: number;
  total_records: number;
  done_pairs: number;
  annotator_labeled?: number;
  annotator_remaining?: number;
}

export interface SubmitAck {
  ok: boolean;
  reason?: string;
}

export interface ApiClient {
  nextTask(annotatorId: string): Promise<AnnotationTask | null>;
  submitLabel(taskId: string, annotatorId: string, label: PreferenceLabel): Promise<SubmitAck>;
  progress(annotatorId: string): Promise<Progress>;
  pairRenderUrl(pairId: string): string;
}

export const KEY_TO_LABEL: Record<string, PreferenceLabel> = {
  "1": "left",
  "2": "right",
  "3": "both_good",
  "4": "both_bad",
};

export const LABEL_CAPTIONS: Record<PreferenceLabel, string> = {
  left: "Left",
  right: "Right",
  both_good: "Both Good",
  both_bad: "Both Bad",
};
