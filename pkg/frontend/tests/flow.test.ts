import { describe, expect, it } from "vitest";

import { AnnotationFlow } from "../src/flow";
import type { FlowState } from "../src/flow";
import { FakeServer } from "./fake_server";

function pairIds(n: number): string[] {
  return Array.from({ length: n }, (_, i) => `pair${i}`);
}

describe("AnnotationFlow", () => {
  it("walks the queue to the done screen", async () => {
    const server = new FakeServer(pairIds(3));
    const flow = new AnnotationFlow(server, "alice");
    await flow.start();

    const seen: string[] = [];
    while (flow.current().kind === "active") {
      const state = flow.current() as Extract<FlowState, { kind: "active" }>;
      seen.push(state.task.pair_id);
      await flow.choose("left");
    }
    expect(flow.current().kind).toBe("done");
    expect(seen).toEqual(["pair0", "pair1", "pair2"]);
    expect(server.records).toHaveLength(3);
  });

  it("visits exactly the five spec states", async () => {
    const server = new FakeServer(pairIds(1));
    const flow = new AnnotationFlow(server, "alice");
    const kinds: string[] = [];
    flow.subscribe((state) => {
      if (kinds[kinds.length - 1] !== state.kind) {
        kinds.push(state.kind);
      }
    });
    await flow.start();
    await flow.choose("both_good");
    expect(kinds).toEqual(["loading", "active", "submitting", "loading", "done"]);
  });

  it("ignores input while a submission is in flight", async () => {
    const server = new FakeServer(pairIds(2));
    const flow = new AnnotationFlow(server, "alice");
    await flow.start();
    // fire two chooses without awaiting the first: second must be dropped
    const first = flow.choose("left");
    const second = flow.choose("right");
    await Promise.all([first, second]);
    expect(server.records).toHaveLength(1);
    expect(server.records[0]?.label).toBe("left");
  });

  it("re-enables with a notice on non-lease rejection", async () => {
    const server = new FakeServer(pairIds(1));
    const flow = new AnnotationFlow(server, "alice");
    await flow.start();
    const active = flow.current() as Extract<FlowState, { kind: "active" }>;
    // sneak a conflicting record in behind the lease
    server.records.push({ pair_id: active.task.pair_id, annotator_id: "alice", label: "right" });
    await flow.choose("left");
    const after = flow.current();
    expect(after.kind).toBe("active");
    if (after.kind === "active") {
      expect(after.notice).toContain("already labeled");
    }
  });

  it("fetches a fresh task with a notice when the lease expired", async () => {
    const server = new FakeServer(pairIds(2));
    const flow = new AnnotationFlow(server, "alice");
    await flow.start();
    const active = flow.current() as Extract<FlowState, { kind: "active" }>;
    server.expireLease(active.task.task_id);
    await flow.choose("left");
    const after = flow.current();
    expect(after.kind).toBe("active");
    if (after.kind === "active") {
      expect(after.notice).toContain("new task");
    }
    expect(server.records).toHaveLength(0);
  });

  it("keeps the pending label across a network error and retries it", async () => {
    const server = new FakeServer(pairIds(1));
    const flow = new AnnotationFlow(server, "alice");
    await flow.start();
    server.failNextSubmit = true;
    await flow.choose("both_bad");
    expect(flow.current().kind).toBe("error");
    await flow.retry();
    expect(flow.current().kind).toBe("done");
    expect(server.records).toEqual([
      { pair_id: "pair0", annotator_id: "alice", label: "both_bad" },
    ]);
  });

  it("reports progress from the server", async () => {
    const server = new FakeServer(pairIds(4));
    const flow = new AnnotationFlow(server, "alice");
    await flow.start();
    await flow.choose("left");
    const progress = flow.currentProgress();
    expect(progress?.annotator_labeled).toBe(1);
    expect(progress?.total_pairs).toBe(4);
  });
});
