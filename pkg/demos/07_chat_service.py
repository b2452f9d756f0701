#!/usr/bin/env python3
"""Spin up the HTTP chat service on an ephemeral port and drive one
conversation through it, steering the second bot turn with an act
override, the way the browser client does.
"""

import json
import threading
import urllib.request

import numpy as np

from actchat.corpus import build_vocab, tokenize_corpus
from actchat.bundle import ModelBundle
from actchat.classifier import ActClassifier, ClassifierTrainConfig, train_classifier
from actchat.config import SlConfig
from actchat.generator import GenerationNet, SpecialIds
from actchat.pipeline import train_sl
from actchat.policy import PolicyNet
from actchat.service import ChatService, make_server
from actchat.toyworld import generate_toy_corpus

corpus = generate_toy_corpus(seed=13, n_dialogues=50)
vocab = build_vocab((t.text for d in corpus for t in d.turns), max_size=400)
tokenize_corpus(corpus, vocab)
rng = np.random.default_rng(0)

print("training a small bundle (classifier + policy + generator) ...")
clf = ActClassifier(len(vocab), rng=rng)
train_classifier(clf, corpus, ClassifierTrainConfig(epochs=4, seed=0))
policy = PolicyNet(len(vocab), rng=rng)
generator = GenerationNet(len(vocab), SpecialIds.from_vocab(vocab), rng=rng)
train_sl(policy, generator, corpus, SlConfig(epochs=4))

bundle = ModelBundle(vocab=vocab, config={}, classifier=clf, policy=policy,
                     generator=generator)
service = ChatService(bundle, corpus, beam_size=5, max_response_len=16,
                      threshold=0.97, seed=0)
server = make_server(service, "127.0.0.1", 0)
threading.Thread(target=server.serve_forever, daemon=True).start()
host, port = server.server_address
base = f"http://{host}:{port}"
print(f"service listening on {base}")


def call(path, method="GET", body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(base + path, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read().decode())


acts = call("/api/acts")
print("\nthe seven acts:", ", ".join(a["name"] for a in acts))

opened = call("/api/sessions", "POST", {})
sid = opened["session_id"]
print(f"\nbot opens [{opened['bot']['act']}]: {opened['bot']['text']}")

script = [
    ("today i really enjoyed the soup", None),
    ("what about the tea", "CS.Q"),  # force a context switch
    ("yes i truly loved the concert", None),
]
for text, override in script:
    body = {"text": text}
    if override:
        body["act_override"] = override
    reply = call(f"/api/sessions/{sid}/turns", "POST", body)
    steer = f"   (forced act {override})" if override else ""
    print(f"\nuser: {text}{steer}")
    print(f"bot  [{reply['bot']['act']}]: {reply['bot']['text']}")
    if reply["terminated"]:
        # the service noticed the bot repeating itself and closed the session
        print(f"(session auto-terminated: {reply['cause']})")
        break
else:
    print("\ncandidates the client could steer toward next:")
    for cand in reply["candidates"]:
        print(f"  {cand['act']:4s} p={cand['prob']:.2f}  {cand['text']}")

transcript = call(f"/api/sessions/{sid}")
print(f"\ntranscript has {len(transcript['turns'])} turns;"
      f" overrides recorded: "
      f"{[t['act'] for t in transcript['turns'] if t['act_source'] == 'override']}")
server.shutdown()
server.server_close()
