import { ChatClient } from "./api.js";
import {
  SessionView,
  applyFailure,
  applyOpening,
  applyTurnResponse,
  applyUserSend,
  emptyView,
  selectAct,
} from "./state.js";
import { ChatUi } from "./ui.js";

const client = new ChatClient("");
let view: SessionView = emptyView();

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const ui = new ChatUi(root, {
  onSend(text) {
    if (!view.sessionId || view.pending || view.terminated) return;
    const sessionId = view.sessionId;
    const act = view.selectedAct;
    view = applyUserSend(view, text);
    ui.render(view);
    client
      .sendTurn(sessionId, text, act)
      .then((payload) => {
        view = applyTurnResponse({ ...view, selectedAct: act }, payload);
        ui.render(view);
      })
      .catch((err) => {
        view = applyFailure(view, err instanceof Error ? err.message : String(err));
        ui.render(view);
      });
  },
  onSelectAct(act) {
    view = selectAct(view, act);
    ui.render(view);
  },
  onNewSession() {
    start();
  },
});

function start(): void {
  client
    .createSession()
    .then((payload) => {
      view = applyOpening(view, payload);
      ui.render(view);
      const input = document.getElementById("composer-input");
      if (input) (input as HTMLInputElement).focus();
    })
    .catch((err) => {
      view = applyFailure(emptyView(), err instanceof Error ? err.message : String(err));
      ui.render(view);
    });
}

client
  .getActs()
  .then((acts) => ui.setActDefinitions(acts))
  .catch(() => undefined)
  .finally(() => start());
