import type { AnnotationTask, ApiClient, PreferenceLabel, Progress } from "./types";

export type FlowState =
  | { kind: "loading" }
  | { kind: "active"; task: AnnotationTask; notice: string | null }
  | { kind: "submitting"; task: AnnotationTask; label: PreferenceLabel }
  | { kind: "done" }
  | { kind: "error"; message: string; pending: PendingSubmission | null };

interface PendingSubmission {
  task: AnnotationTask;
  label: PreferenceLabel;
}

type Listener = (state: FlowState, progress: Progress | null) => void;

const LEASE_HINTS = ["lease", "expired", "different annotator"];

/** Annotation session state machine; exactly one active task at a time. */
export class AnnotationFlow {
  private state: FlowState = { kind: "loading" };
  private progress: Progress | null = null;
  private listeners: Listener[] = [];

  constructor(
    private readonly api: ApiClient,
    readonly annotatorId: string,
  ) {}

  current(): FlowState {
    return this.state;
  }

  currentProgress(): Progress | null {
    return this.progress;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
    listener(this.state, this.progress);
  }

  private setState(state: FlowState): void {
    this.state = state;
    for (const listener of this.listeners) {
      listener(this.state, this.progress);
    }
  }

  async start(): Promise<void> {
    await this.advance(null);
  }

  /** Fetch the next open task, or the done screen when the queue is empty. */
  async advance(notice: string | null): Promise<void> {
    this.setState({ kind: "loading" });
    try {
      const task = await this.api.nextTask(this.annotatorId);
      this.progress = await this.api.progress(this.annotatorId);
      if (task === null) {
        this.setState({ kind: "done" });
      } else {
        this.setState({ kind: "active", task, notice });
      }
    } catch (err) {
      this.setState({ kind: "error", message: String(err), pending: null });
    }
  }

  /** Submit a label for the active task. Ignored unless a task is active. */
  async choose(label: PreferenceLabel): Promise<void> {
    if (this.state.kind !== "active") {
      return; // in-flight submission or no task: input is dropped
    }
    const task = this.state.task;
    this.setState({ kind: "submitting", task, label });
    await this.submit(task, label);
  }

  private async submit(task: AnnotationTask, label: PreferenceLabel): Promise<void> {
    try {
      const ack = await this.api.submitLabel(task.task_id, this.annotatorId, label);
      if (ack.ok) {
        await this.advance(null);
        return;
      }
      const reason = ack.reason ?? "submission rejected";
      if (LEASE_HINTS.some((hint) => reason.includes(hint))) {
        // stale lease: move on to a freshly leased task with a notice
        await this.advance(`Lease expired; got a new task (${reason})`);
      } else {
        this.setState({ kind: "active", task, notice: reason });
      }
    } catch (err) {
      this.setState({
        kind: "error",
        message: String(err),
        pending: { task, label },
      });
    }
  }

  /** Retry after a network error; resubmits the pending label if one exists. */
  async retry(): Promise<void> {
    if (this.state.kind !== "error") {
      return;
    }
    const pending = this.state.pending;
    if (pending !== null) {
      this.setState({ kind: "submitting", task: pending.task, label: pending.label });
      await this.submit(pending.task, pending.label);
    } else {
      await this.advance(null);
    }
  }
}
