"""Interactive chat sessions and the HTTP JSON API around them.

The bot opens every conversation with a message sampled from the corpus.
Each bot turn selects a dialogue act with the policy (the human can
override it), decodes the response with beam search restricted to that
act, and also reports the best candidate under every act so a client can
steer the next turn. A session auto-terminates when the bot repeats
itself across its own two latest turns.
"""

from __future__ import annotations

import json
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import tape as T
from .acts import ACT_DEFINITIONS, DialogueAct
from .bundle import ModelBundle
from .corpus import Corpus, Dialogue, Utterance, detokenize, dialogue_to_json, tokenize
from .errors import ActChatError, DataError, StateError


@dataclass
class ChatTurn:
    speaker: str  # "bot" | "user"
    text: str
    tokens: list[int]
    act: DialogueAct
    act_source: str  # "model" | "override" | "classifier"


@dataclass
class ChatSession:
    id: str
    created: float
    turns: list[ChatTurn] = field(default_factory=list)
    terminated: bool = False
    cause: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def transcript_json(self) -> dict:
        return {
            "session_id": self.id,
            "turns": [{"speaker": t.speaker, "text": t.text, "act": t.act.label,
                       "act_source": t.act_source} for t in self.turns],
            "terminated": self.terminated,
            "cause": self.cause,
        }

    def to_dialogue(self) -> Dialogue:
        turns = [Utterance(speaker="A" if t.speaker == "bot" else "B", text=t.text,
                           tokens=list(t.tokens), predicted=t.act) for t in self.turns]
        return Dialogue(id=self.id, turns=turns, termination=self.cause)


class ChatService:
    """Shared read-only models plus per-session mutable transcripts."""

    def __init__(self, bundle: ModelBundle, openers: Corpus, beam_size: int = 5,
                 threshold: float = 0.9, max_response_len: int = 16, seed: int = 0):
        for missing in ("classifier", "policy", "generator"):
            if getattr(bundle, missing) is None:
                raise DataError(f"chat service needs a bundle with a {missing}")
        self.bundle = bundle
        self.openers = [d.turns[0] for d in openers if d.turns]
        if not self.openers:
            raise DataError("no opening messages available")
        self.beam_size = beam_size
        self.threshold = threshold
        self.max_response_len = max_response_len
        self._rng = np.random.default_rng(seed)
        self._sessions: dict[str, ChatSession] = {}
        self._dict_lock = threading.Lock()

    # ------------------------------------------------------------- sessions

    def create_session(self) -> tuple[ChatSession, dict]:
        with self._dict_lock:
            opener = self.openers[int(self._rng.integers(len(self.openers)))]
            session = ChatSession(id=uuid.uuid4().hex[:12], created=time.time())
            self._sessions[session.id] = session
        dist = self.bundle.classifier.classify(opener.tokens)
        act = DialogueAct(int(np.argmax(dist)))
        turn = ChatTurn(speaker="bot", text=opener.text, tokens=list(opener.tokens),
                        act=act, act_source="model")
        session.turns.append(turn)
        payload = {
            "session_id": session.id,
            "bot": {"text": turn.text, "act": act.label,
                    "act_probs": self._policy_probs(session)},
            "candidates": self._candidates(session),
            "terminated": False,
        }
        return session, payload

    def get_session(self, session_id: str) -> ChatSession:
        with self._dict_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise KeyError(session_id)
        return session

    def delete_session(self, session_id: str) -> None:
        with self._dict_lock:
            if session_id not in self._sessions:
                raise KeyError(session_id)
            del self._sessions[session_id]

    # ----------------------------------------------------------- turn logic

    def _session_state(self, session: ChatSession) -> list:
        return [(t.tokens, t.act) for t in session.turns]

    def _policy_probs(self, session: ChatSession) -> list[float]:
        dist = self.bundle.policy.act_distribution(self._session_state(session))
        return [float(x) for x in dist]

    def _decode(self, session: ChatSession, act: DialogueAct) -> list[int]:
        turns = session.turns
        u_prev = turns[-1].tokens
        u_prev2 = turns[-2].tokens if len(turns) >= 2 else None
        results = self.bundle.generator.beam_search(
            act, u_prev, u_prev2, beam_size=self.beam_size,
            max_len=self.max_response_len)
        return results[0][0]

    def _candidates(self, session: ChatSession) -> list[dict]:
        probs = self._policy_probs(session)
        out = []
        for act in DialogueAct:
            tokens = self._decode(session, act)
            out.append({"act": act.label,
                        "text": detokenize(tokens, self.bundle.vocab),
                        "prob": probs[int(act)]})
        return out

    def chat_turn(self, session: ChatSession, user_text: str | None,
                  act_override: DialogueAct | None = None) -> dict:
        """Append the user's turn (if any), pick an act, decode the bot reply,
        and report the per-act candidates for the next steering decision."""
        with session.lock:
            if session.terminated:
                raise StateError(f"session {session.id} is terminated ({session.cause})")
            if user_text is not None and user_text.strip():
                tokens = tokenize(user_text, self.bundle.vocab)
                prev = session.turns[-1] if session.turns else None
                dist = self.bundle.classifier.classify(
                    tokens, prev.tokens if prev else None, prev.act if prev else None)
                session.turns.append(ChatTurn(
                    speaker="user", text=user_text, tokens=tokens,
                    act=DialogueAct(int(np.argmax(dist))), act_source="classifier"))
            probs = self._policy_probs(session)
            if act_override is not None:
                act = act_override
                source = "override"
            else:
                act = DialogueAct(int(np.argmax(probs)))
                source = "model"
            tokens = self._decode(session, act)
            turn = ChatTurn(speaker="bot", text=detokenize(tokens, self.bundle.vocab),
                            tokens=tokens, act=act, act_source=source)
            session.turns.append(turn)
            self._check_repetition(session)
            return {
                "bot": {"text": turn.text, "act": act.label, "act_probs": probs},
                "candidates": self._candidates(session),
                "terminated": session.terminated,
                "cause": session.cause,
            }

    def _check_repetition(self, session: ChatSession) -> None:
        bot_turns = [t for t in session.turns if t.speaker == "bot"]
        if len(bot_turns) < 2:
            return
        prev, cur = bot_turns[-2], bot_turns[-1]
        gen = self.bundle.generator
        sim = T.cosine(gen.embed_utterance(prev.tokens), gen.embed_utterance(cur.tokens))
        if sim > self.threshold:
            session.terminated = True
            session.cause = "repetition"


# ------------------------------------------------------------------- HTTP

_SESSION_RE = re.compile(r"^/api/sessions/([0-9a-f]+)$")
_TURNS_RE = re.compile(r"^/api/sessions/([0-9a-f]+)/turns$")
_EXPORT_RE = re.compile(r"^/api/sessions/([0-9a-f]+)/export$")


class _Handler(BaseHTTPRequestHandler):
    service: ChatService  # set by make_server

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send(self, status: int, payload, content_type="application/json") -> None:
        if content_type == "application/json":
            body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        else:
            body = payload.encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", content_type + "; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str) -> None:
        self._send(status, {"error": message})

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length == 0:
            return {}
        raw = self.rfile.read(length)
        try:
            data = json.loads(raw.decode("utf-8"))
        except ValueError:
            raise DataError("request body is not valid JSON")
        if not isinstance(data, dict):
            raise DataError("request body must be a JSON object")
        return data

    def do_GET(self):
        try:
            if self.path == "/api/acts":
                self._send(200, [{"name": act.label,
                                  "definition": ACT_DEFINITIONS[act]}
                                 for act in DialogueAct])
                return
            m = _SESSION_RE.match(self.path)
            if m:
                session = self.service.get_session(m.group(1))
                self._send(200, session.transcript_json())
                return
            m = _EXPORT_RE.match(self.path)
            if m:
                session = self.service.get_session(m.group(1))
                line = json.dumps(dialogue_to_json(session.to_dialogue()),
                                  ensure_ascii=False)
                self._send(200, line + "\n", content_type="application/x-ndjson")
                return
            self._error(404, f"no route for GET {self.path}")
        except KeyError:
            self._error(404, "session not found")
        except ActChatError as exc:
            self._error(400, str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            self._error(500, f"internal error: {exc}")

    def do_POST(self):
        try:
            if self.path == "/api/sessions":
                _, payload = self.service.create_session()
                self._send(200, payload)
                return
            m = _TURNS_RE.match(self.path)
            if m:
                session = self.service.get_session(m.group(1))
                body = self._body()
                override = None
                if body.get("act_override"):
                    override = DialogueAct.from_label(body["act_override"])
                payload = self.service.chat_turn(session, body.get("text"), override)
                self._send(200, payload)
                return
            self._error(404, f"no route for POST {self.path}")
        except KeyError:
            self._error(404, "session not found")
        except StateError as exc:
            self._error(409, str(exc))
        except ActChatError as exc:
            self._error(400, str(exc))
        except Exception as exc:  # pragma: no cover - defensive
            self._error(500, f"internal error: {exc}")

    def do_DELETE(self):
        try:
            m = _SESSION_RE.match(self.path)
            if m:
                self.service.delete_session(m.group(1))
                self._send(200, {"deleted": m.group(1)})
                return
            self._error(404, f"no route for DELETE {self.path}")
        except KeyError:
            self._error(404, "session not found")
        except Exception as exc:  # pragma: no cover - defensive
            self._error(500, f"internal error: {exc}")


def make_server(service: ChatService, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)
