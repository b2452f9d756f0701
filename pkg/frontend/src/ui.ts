// DOM rendering: the whole view re-renders from SessionView on each change.

import { ACT_NAMES, ActInfo, ActName } from "./api.js";
import { SessionView, inputDisabled } from "./state.js";

export interface UiHandlers {
  onSend(text: string): void;
  onSelectAct(act: ActName | null): void;
  onNewSession(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ChatUi {
  private definitions = new Map<string, string>();

  constructor(
    private readonly root: HTMLElement,
    private readonly handlers: UiHandlers,
  ) {}

  setActDefinitions(acts: ActInfo[]): void {
    this.definitions = new Map(acts.map((a) => [a.name, a.definition]));
  }

  render(view: SessionView): void {
    this.root.replaceChildren(
      this.renderTranscript(view),
      this.renderProbBars(view),
      this.renderCandidates(view),
      this.renderComposer(view),
    );
  }

  private renderTranscript(view: SessionView): HTMLElement {
    const wrap = el("section", "transcript");
    for (const turn of view.turns) {
      const row = el("div", `turn turn-${turn.speaker}`);
      if (turn.act) {
        const badge = el("span", `act-badge${turn.actSource === "override" ? " overridden" : ""}`, turn.act);
        const definition = this.definitions.get(turn.act);
        if (definition) badge.title = definition;
        row.append(badge);
      }
      row.append(el("span", "turn-text", turn.text));
      wrap.append(row);
    }
    if (view.terminated) {
      wrap.append(el("div", "banner banner-end", `conversation ended: ${view.cause ?? "done"}`));
    }
    if (view.error) {
      const banner = el("div", "banner banner-error", `${view.error} `);
      const retry = el("button", "retry", "retry");
      retry.addEventListener("click", () => this.handlers.onSend(view.draft));
      banner.append(retry);
      wrap.append(banner);
    }
    return wrap;
  }

  private renderProbBars(view: SessionView): HTMLElement {
    const wrap = el("section", "probs");
    wrap.append(el("h3", undefined, "policy's next-act distribution"));
    ACT_NAMES.forEach((name, i) => {
      const row = el("div", "prob-row");
      const label = el("span", "prob-label", name);
      const definition = this.definitions.get(name);
      if (definition) label.title = definition;
      const bar = el("div", "prob-bar");
      const fill = el("div", "prob-fill");
      fill.style.width = `${Math.round((view.actProbs[i] ?? 0) * 100)}%`;
      bar.append(fill);
      row.append(label, bar, el("span", "prob-value", (view.actProbs[i] ?? 0).toFixed(2)));
      wrap.append(row);
    });
    return wrap;
  }

  private renderCandidates(view: SessionView): HTMLElement {
    const wrap = el("section", "candidates");
    wrap.append(el("h3", undefined, "steer the next bot turn"));
    for (const cand of view.candidates) {
      const row = el("button", `candidate${view.selectedAct === cand.act ? " selected" : ""}`);
      row.disabled = inputDisabled(view);
      const badge = el("span", "act-badge", cand.act);
      const definition = this.definitions.get(cand.act);
      if (definition) badge.title = definition;
      row.append(badge, el("span", "candidate-text", cand.text));
      row.addEventListener("click", () => this.handlers.onSelectAct(cand.act as ActName));
      wrap.append(row);
    }
    return wrap;
  }

  private renderComposer(view: SessionView): HTMLElement {
    const wrap = el("section", "composer");
    const input = el("input");
    input.type = "text";
    input.placeholder = view.terminated ? "session over" : "say something";
    input.disabled = inputDisabled(view);
    input.id = "composer-input";
    if (view.draft) input.value = view.draft;
    const send = el("button", "send", view.selectedAct ? `send as ${view.selectedAct}` : "send");
    send.disabled = inputDisabled(view);
    const submit = () => {
      if (!input.disabled) this.handlers.onSend(input.value);
    };
    send.addEventListener("click", submit);
    input.addEventListener("keydown", (ev) => {
      if (ev.key === "Enter") submit();
    });
    const fresh = el("button", "new-session", "new conversation");
    fresh.addEventListener("click", () => this.handlers.onNewSession());
    wrap.append(input, send, fresh);
    return wrap;
  }
}
