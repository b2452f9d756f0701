// Session view state: a pure reduction of API payloads. Rendering reads
// this and nothing else, so replaying the transcript reproduces the view.

import {
  ACT_NAMES,
  ActName,
  Candidate,
  OpenSessionResponse,
  Transcript,
  TurnResponse,
} from "./api.js";

export interface ViewTurn {
  speaker: "bot" | "user";
  text: string;
  act: ActName | null;
  actSource: "model" | "override" | "classifier" | null;
}

export interface SessionView {
  sessionId: string | null;
  turns: ViewTurn[];
  actProbs: number[];
  candidates: Candidate[];
  selectedAct: ActName | null;
  pending: boolean;
  terminated: boolean;
  cause: string | null;
  error: string | null;
  draft: string; // text restored into the composer after a failed send
}

export function emptyView(): SessionView {
  return {
    sessionId: null,
    turns: [],
    actProbs: new Array(ACT_NAMES.length).fill(0),
    candidates: [],
    selectedAct: null,
    pending: false,
    terminated: false,
    cause: null,
    error: null,
    draft: "",
  };
}

function orderedCandidates(candidates: Candidate[]): Candidate[] {
  // the panel always lists the taxonomy in its fixed order, untouched
  return ACT_NAMES.map((name) => {
    const found = candidates.find((c) => c.act === name);
    return found ?? { act: name, text: "", prob: 0 };
  });
}

export function applyOpening(view: SessionView, payload: OpenSessionResponse): SessionView {
  return {
    ...emptyView(),
    sessionId: payload.session_id,
    turns: [{ speaker: "bot", text: payload.bot.text, act: payload.bot.act, actSource: "model" }],
    actProbs: [...payload.bot.act_probs],
    candidates: orderedCandidates(payload.candidates),
    terminated: payload.terminated,
    cause: payload.cause ?? null,
  };
}

export function applyUserSend(view: SessionView, text: string): SessionView {
  const turns = text.trim()
    ? [...view.turns, { speaker: "user" as const, text, act: null, actSource: null }]
    : view.turns;
  return { ...view, turns, pending: true, error: null };
}

export function applyTurnResponse(view: SessionView, payload: TurnResponse): SessionView {
  const actSource = view.selectedAct ? ("override" as const) : ("model" as const);
  return {
    ...view,
    turns: [
      ...view.turns,
      { speaker: "bot", text: payload.bot.text, act: payload.bot.act, actSource },
    ],
    actProbs: [...payload.bot.act_probs],
    candidates: orderedCandidates(payload.candidates),
    selectedAct: null,
    pending: false,
    terminated: payload.terminated,
    cause: payload.cause ?? null,
    error: null,
    draft: "",
  };
}

export function applyFailure(view: SessionView, message: string): SessionView {
  // the session is preserved: the optimistic user turn rolls back into the
  // composer so a retry re-sends exactly what failed, never a duplicate
  let turns = view.turns;
  let draft = view.draft;
  const last = turns[turns.length - 1];
  if (view.pending && last && last.speaker === "user") {
    draft = last.text;
    turns = turns.slice(0, -1);
  }
  return { ...view, turns, draft, pending: false, error: message };
}

export function selectAct(view: SessionView, act: ActName | null): SessionView {
  return { ...view, selectedAct: view.selectedAct === act ? null : act };
}

export function applyTranscript(view: SessionView, transcript: Transcript): SessionView {
  return {
    ...view,
    sessionId: transcript.session_id,
    turns: transcript.turns.map((t) => ({
      speaker: t.speaker,
      text: t.text,
      act: t.act,
      actSource: t.act_source,
    })),
    terminated: transcript.terminated,
    cause: transcript.cause,
    pending: false,
  };
}

/** Input is locked while a turn is pending or after termination. */
export function inputDisabled(view: SessionView): boolean {
  return view.pending || view.terminated || view.sessionId === null;
}
