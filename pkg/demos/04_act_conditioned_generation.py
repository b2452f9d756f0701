#!/usr/bin/env python3
"""Jointly train the act policy and the act-conditioned generator, then
steer one context through all seven acts.

The generator reads [act marker ; latest utterance ; <sep> ; one before],
attends over it, and decodes with beam search. Forcing different act
markers on the same context is the controllability story in miniature.
"""

import numpy as np

from actchat.acts import DialogueAct
from actchat.corpus import build_vocab, detokenize, tokenize_corpus
from actchat.generator import GenerationNet, SpecialIds
from actchat.metrics import out_of_context_ratio
from actchat.pipeline import train_sl
from actchat.policy import PolicyNet
from actchat.config import SlConfig
from actchat.toyworld import generate_toy_corpus

corpus = generate_toy_corpus(seed=5, n_dialogues=80)
train, val = corpus[:64], corpus[64:]
vocab = build_vocab((t.text for d in train for t in d.turns), max_size=400)
tokenize_corpus(train, vocab)
tokenize_corpus(val, vocab)

rng = np.random.default_rng(0)
policy = PolicyNet(len(vocab), rng=rng)
generator = GenerationNet(len(vocab), SpecialIds.from_vocab(vocab), rng=rng)

print("joint supervised training (generation NLL + policy NLL) ...")
history = train_sl(policy, generator, train, SlConfig(epochs=6), val=val)
for row in history:
    print(f"  epoch {row['epoch']}: generation {row['generation_nll']:9.1f}"
          f"  policy {row['policy_nll']:7.1f}"
          f"  val perplexity {row.get('val_perplexity', float('nan')):.2f}")

context = train[0].turns[0]
print()
print(f"context: {context.text!r}")
print()
print("== the same context under each forced act ==")
for act in DialogueAct:
    tokens = generator.beam_search(act, context.tokens, beam_size=5, max_len=16)[0][0]
    words = detokenize(tokens, vocab)
    ooc = out_of_context_ratio(context.text.split(), words.split())
    print(f"  {act.label:4s} len {len(tokens):2d}  new-word ratio {ooc:.2f}  {words}")

print()
dist = policy.act_distribution([(context.tokens, context.gold.argmax())])
ranked = sorted(zip(DialogueAct, dist), key=lambda p: -p[1])
print("policy's own preference for the next act:",
      ", ".join(f"{a.label} {p:.2f}" for a, p in ranked[:3]))
