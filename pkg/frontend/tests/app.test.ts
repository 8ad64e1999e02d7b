import { beforeEach, describe, expect, it } from "vitest";

import { mountApp } from "../src/app";
import type { App } from "../src/app";
import type { PreferenceLabel } from "../src/types";
import { FakeServer } from "./fake_server";

function pairIds(n: number): string[] {
  return Array.from({ length: n }, (_, i) => `pair${String(i).padStart(2, "0")}`);
}

function pressKey(key: string): void {
  window.dispatchEvent(new KeyboardEvent("keydown", { key }));
}

async function settle(): Promise<void> {
  // flush the promise chain started by the key handler
  for (let i = 0; i < 6; i += 1) {
    await Promise.resolve();
  }
}

function visiblePairId(root: HTMLElement): string | null {
  const img = root.querySelector('[data-testid="pair-image"]');
  return img?.getAttribute("data-pair-id") ?? null;
}

describe("annotation app", () => {
  let root: HTMLElement;
  let app: App | null = null;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app") as HTMLElement;
    app?.dispose();
  });

  it("labels all 20 pairs with keys 1-4 and exports the entered sequence", async () => {
    const server = new FakeServer(pairIds(20));
    app = mountApp(root, server, "annotator-1");
    await settle();

    const keySequence = Array.from({ length: 20 }, (_, i) => String((i % 4) + 1));
    const expectedLabels: PreferenceLabel[] = keySequence.map(
      (k) => (["left", "right", "both_good", "both_bad"] as const)[Number(k) - 1]!,
    );

    for (const key of keySequence) {
      expect(visiblePairId(root)).not.toBeNull();
      pressKey(key);
      await settle();
    }

    expect(root.textContent).toContain("All done");
    expect(server.records.map((r) => r.label)).toEqual(expectedLabels);
    expect(server.records.map((r) => r.pair_id)).toEqual(pairIds(20));
  });

  it("shows the first open pair and four labeled buttons", async () => {
    const server = new FakeServer(pairIds(3));
    app = mountApp(root, server, "alice");
    await settle();
    expect(visiblePairId(root)).toBe("pair00");
    const buttons = [...root.querySelectorAll("button.choice")];
    expect(buttons.map((b) => b.textContent)).toEqual([
      "1: Left",
      "2: Right",
      "3: Both Good",
      "4: Both Bad",
    ]);
    expect(buttons.every((b) => !(b as HTMLButtonElement).disabled)).toBe(true);
  });

  it("ignores non-mapped keys", async () => {
    const server = new FakeServer(pairIds(1));
    app = mountApp(root, server, "alice");
    await settle();
    pressKey("5");
    pressKey("x");
    await settle();
    expect(server.records).toHaveLength(0);
    expect(visiblePairId(root)).toBe("pair00");
  });

  it("double key press before ack submits once", async () => {
    const server = new FakeServer(pairIds(2));
    app = mountApp(root, server, "alice");
    await settle();
    pressKey("1");
    pressKey("2"); // still submitting; must be dropped
    await settle();
    expect(server.records).toHaveLength(1);
    expect(server.records[0]?.label).toBe("left");
  });

  it("shows done screen when the queue is exhausted", async () => {
    const server = new FakeServer(pairIds(1));
    app = mountApp(root, server, "alice");
    await settle();
    pressKey("3");
    await settle();
    expect(root.textContent).toContain("All done");
    const buttons = [...root.querySelectorAll("button.choice")];
    expect(buttons.every((b) => (b as HTMLButtonElement).disabled)).toBe(true);
  });

  it("server failure shows retry banner and loses no label", async () => {
    const server = new FakeServer(pairIds(1));
    app = mountApp(root, server, "alice");
    await settle();
    server.failNextSubmit = true;
    pressKey("4");
    await settle();
    expect(root.textContent).toContain("Connection problem");
    const retry = root.querySelector('[data-testid="retry"]') as HTMLButtonElement;
    retry.click();
    await settle();
    expect(server.records).toEqual([
      { pair_id: "pair00", annotator_id: "alice", label: "both_bad" },
    ]);
    expect(root.textContent).toContain("All done");
  });

  it("expired lease shows a notice and loads a fresh task", async () => {
    const server = new FakeServer(pairIds(2));
    app = mountApp(root, server, "alice");
    await settle();
    const firstTask = `t::pair00::alice`;
    server.expireLease(firstTask);
    pressKey("1");
    await settle();
    const notice = root.querySelector('[data-testid="notice"]');
    expect(notice?.textContent).toContain("new task");
    expect(visiblePairId(root)).not.toBeNull();
  });

  it("progress reflects server counts", async () => {
    const server = new FakeServer(pairIds(4));
    app = mountApp(root, server, "alice");
    await settle();
    pressKey("1");
    await settle();
    const progress = root.querySelector('[data-testid="progress"]');
    expect(progress?.textContent).toBe("1 / 4 labeled");
  });

  it("two scripted annotators produce the disagreement fixture records", async () => {
    const server = new FakeServer(pairIds(3), 2);
    const scripts: Record<string, string[]> = {
      alice: ["1", "1", "3"],
      bob: ["2", "1", "3"],
    };
    for (const [annotator, keys] of Object.entries(scripts)) {
      document.body.innerHTML = '<div id="app"></div>';
      root = document.getElementById("app") as HTMLElement;
      app?.dispose();
      app = mountApp(root, server, annotator);
      await settle();
      for (const key of keys) {
        pressKey(key);
        await settle();
      }
      expect(root.textContent).toContain("All done");
    }
    const byPair = new Map<string, PreferenceLabel[]>();
    for (const record of server.records) {
      byPair.set(record.pair_id, [...(byPair.get(record.pair_id) ?? []), record.label]);
    }
    expect(byPair.get("pair00")).toEqual(["left", "right"]);
    expect(byPair.get("pair01")).toEqual(["left", "left"]);
    expect(byPair.get("pair02")).toEqual(["both_good", "both_good"]);
  });
});
