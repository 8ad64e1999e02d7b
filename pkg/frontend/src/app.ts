import { AnnotationFlow } from "./flow";
import type { ApiClient, PreferenceLabel, Progress } from "./types";
import { KEY_TO_LABEL, LABEL_CAPTIONS } from "./types";

const LABEL_ORDER: PreferenceLabel[] = ["left", "right", "both_good", "both_bad"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text) {
    node.textContent = text;
  }
  return node;
}

export interface App {
  flow: AnnotationFlow;
  dispose(): void;
}

/** Mount the labeling interface and bind keys 1-4 to the four choices. */
export function mountApp(root: HTMLElement, api: ApiClient, annotatorId: string): App {
  const flow = new AnnotationFlow(api, annotatorId);

  root.innerHTML = "";
  const header = el("div", "header");
  const title = el("span", "title", "Layout preference annotation");
  const progressBox = el("span", "progress");
  progressBox.setAttribute("data-testid", "progress");
  header.append(title, progressBox);

  const notice = el("div", "notice");
  notice.setAttribute("data-testid", "notice");
  const stage = el("div", "stage");
  stage.setAttribute("data-testid", "stage");

  const buttonRow = el("div", "buttons");
  const buttons = new Map<PreferenceLabel, HTMLButtonElement>();
  LABEL_ORDER.forEach((label, index) => {
    const button = el("button", "choice");
    button.textContent = `${index + 1}: ${LABEL_CAPTIONS[label]}`;
    button.setAttribute("data-label", label);
    button.disabled = true;
    button.addEventListener("click", () => {
      void flow.choose(label);
    });
    buttons.set(label, button);
    buttonRow.append(button);
  });

  root.append(header, notice, stage, buttonRow);

  function renderProgress(progress: Progress | null): void {
    if (progress === null) {
      progressBox.textContent = "";
      return;
    }
    const done = progress.annotator_labeled ?? 0;
    progressBox.textContent = `${done} / ${progress.total_pairs} labeled`;
  }

  flow.subscribe((state, progress) => {
    renderProgress(progress);
    notice.textContent = "";
    const enabled = state.kind === "active";
    for (const button of buttons.values()) {
      button.disabled = !enabled;
    }
    switch (state.kind) {
      case "loading":
        stage.innerHTML = "";
        stage.append(el("div", "message", "Loading next pair..."));
        break;
      case "active": {
        if (state.notice) {
          notice.textContent = state.notice;
        }
        stage.innerHTML = "";
        const img = document.createElement("img");
        img.className = "pair-render";
        img.src = api.pairRenderUrl(state.task.pair_id);
        img.alt = `pair ${state.task.pair_id}`;
        img.setAttribute("data-testid", "pair-image");
        img.setAttribute("data-pair-id", state.task.pair_id);
        stage.append(img);
        break;
      }
      case "submitting":
        break; // keep the pair visible; buttons already disabled
      case "done":
        stage.innerHTML = "";
        stage.append(el("div", "message done", "All done. No more pairs for you."));
        break;
      case "error": {
        stage.innerHTML = "";
        const banner = el("div", "message error", `Connection problem: ${state.message}`);
        const retry = el("button", "retry", "Retry");
        retry.setAttribute("data-testid", "retry");
        retry.addEventListener("click", () => {
          void flow.retry();
        });
        stage.append(banner, retry);
        break;
      }
    }
  });

  const onKeyDown = (event: KeyboardEvent): void => {
    const label = KEY_TO_LABEL[event.key];
    if (label !== undefined) {
      event.preventDefault();
      void flow.choose(label);
    }
  };
  window.addEventListener("keydown", onKeyDown);

  void flow.start();
  return {
    flow,
    dispose: () => window.removeEventListener("keydown", onKeyDown),
  };
}
