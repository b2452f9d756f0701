import { describe, expect, it } from "vitest";

import { OpenSessionResponse, TurnResponse } from "../src/api.js";
import {
  applyFailure,
  applyOpening,
  applyTranscript,
  applyTurnResponse,
  applyUserSend,
  emptyView,
  inputDisabled,
  selectAct,
} from "../src/state.js";

const OPENING: OpenSessionResponse = {
  session_id: "s1",
  bot: { text: "hello there", act: "O", act_probs: [0.2, 0.1, 0.1, 0.3, 0.1, 0.1, 0.1] },
  candidates: [
    { act: "CS.S", text: "by the way ...", prob: 0.3 },
    { act: "CM.S", text: "today i ...", prob: 0.2 },
    { act: "CM.Q", text: "how is ...", prob: 0.1 },
    { act: "CM.A", text: "yes i ...", prob: 0.1 },
    { act: "CS.Q", text: "speaking of ...", prob: 0.1 },
    { act: "CS.A", text: "maybe but ...", prob: 0.1 },
    { act: "O", text: "thanks a lot", prob: 0.1 },
  ],
  terminated: false,
};

function reply(overrides: Partial<TurnResponse> = {}): TurnResponse {
  return {
    bot: { text: "today i really enjoyed the soup", act: "CM.S", act_probs: [0.5, 0.2, 0.1, 0.1, 0.05, 0.03, 0.02] },
    candidates: OPENING.candidates,
    terminated: false,
    ...overrides,
  };
}

describe("rendering state", () => {
  it("opening payload becomes one badged bot turn", () => {
    const view = applyOpening(emptyView(), OPENING);
    expect(view.turns).toHaveLength(1);
    expect(view.turns[0]).toMatchObject({ speaker: "bot", act: "O", actSource: "model" });
    expect(inputDisabled(view)).toBe(false);
  });

  it("candidates always render in taxonomy order", () => {
    const view = applyOpening(emptyView(), OPENING);
    expect(view.candidates.map((c) => c.act)).toEqual([
      "CM.S", "CM.Q", "CM.A", "CS.S", "CS.Q", "CS.A", "O",
    ]);
  });

  it("act probabilities pass through unmodified", () => {
    const view = applyTurnResponse(applyOpening(emptyView(), OPENING), reply());
    expect(view.actProbs).toEqual([0.5, 0.2, 0.1, 0.1, 0.05, 0.03, 0.02]);
  });

  it("terminated payload disables input and keeps the cause", () => {
    let view = applyOpening(emptyView(), OPENING);
    view = applyTurnResponse(view, reply({ terminated: true, cause: "repetition" }));
    expect(view.terminated).toBe(true);
    expect(view.cause).toBe("repetition");
    expect(inputDisabled(view)).toBe(true);
  });

  it("pending send locks input until the reply lands", () => {
    let view = applyOpening(emptyView(), OPENING);
    view = applyUserSend(view, "hello");
    expect(view.pending).toBe(true);
    expect(inputDisabled(view)).toBe(true);
    view = applyTurnResponse(view, reply());
    expect(view.pending).toBe(false);
    expect(inputDisabled(view)).toBe(false);
  });

  it("bot turn records an override when an act was selected", () => {
    let view = applyOpening(emptyView(), OPENING);
    view = selectAct(view, "CS.Q");
    view = applyUserSend(view, "hm");
    view = applyTurnResponse(view, reply());
    const last = view.turns[view.turns.length - 1];
    expect(last.actSource).toBe("override");
    expect(view.selectedAct).toBeNull(); // override is one-shot
  });

  it("selecting the same act twice clears the pick", () => {
    let view = applyOpening(emptyView(), OPENING);
    view = selectAct(view, "CS.S");
    view = selectAct(view, "CS.S");
    expect(view.selectedAct).toBeNull();
  });

  it("a failed send keeps the session and restores the draft", () => {
    let view = applyOpening(emptyView(), OPENING);
    view = applyUserSend(view, "hello");
    view = applyFailure(view, "network down");
    expect(view.error).toBe("network down");
    expect(view.turns.length).toBe(1); // the optimistic user turn rolled back
    expect(view.draft).toBe("hello"); // ready to retry exactly what failed
    expect(view.terminated).toBe(false);
    expect(inputDisabled(view)).toBe(false); // retry is possible
  });

  it("re-rendering from the server transcript reproduces the view", () => {
    let view = applyOpening(emptyView(), OPENING);
    view = applyUserSend(view, "hello");
    view = applyTurnResponse(view, reply());
    const replayed = applyTranscript(emptyView(), {
      session_id: "s1",
      turns: [
        { speaker: "bot", text: "hello there", act: "O", act_source: "model" },
        { speaker: "user", text: "hello", act: "CM.S", act_source: "classifier" },
        { speaker: "bot", text: "today i really enjoyed the soup", act: "CM.S", act_source: "model" },
      ],
      terminated: false,
      cause: null,
    });
    expect(replayed.turns.map((t) => [t.speaker, t.text])).toEqual(
      view.turns.map((t) => [t.speaker, t.text]),
    );
    expect(replayed.terminated).toBe(view.terminated);
  });
});
