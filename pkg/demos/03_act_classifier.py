#!/usr/bin/env python3
"""Train the dialogue act classifier on the toy world and tag a dialogue.

Each utterance is classified from (current utterance, previous utterance,
previous predicted act); the first turn pads with zeros.
"""

import numpy as np

from actchat.classifier import (ActClassifier, ClassifierConfig, ClassifierTrainConfig,
                                evaluate_classifier, train_classifier)
from actchat.corpus import build_vocab, tag_corpus, tokenize_corpus
from actchat.toyworld import generate_toy_corpus

corpus = generate_toy_corpus(seed=3, n_dialogues=60)
train, val, test = corpus[:42], corpus[42:50], corpus[50:]
vocab = build_vocab((t.text for d in train for t in d.turns), max_size=400)
for part in (train, val, test):
    tokenize_corpus(part, vocab)

clf = ActClassifier(len(vocab), ClassifierConfig(), rng=np.random.default_rng(0))
print("training on", sum(len(d.turns) for d in train), "utterances ...")
history = train_classifier(clf, train, ClassifierTrainConfig(epochs=8, seed=0), val=val)
for row in history:
    print(f"  epoch {row['epoch']}: loss {row['train_loss']:9.2f}"
          f"  val accuracy {row.get('val_accuracy', float('nan')):.3f}")

print()
print(f"held-out tagging accuracy: {evaluate_classifier(clf, test):.3f}")

print()
print("== tags on an unseen dialogue (gold in brackets) ==")
tagged = tag_corpus(test[:1], clf)
for turn in tagged[0].turns:
    print(f"  {turn.speaker} [{turn.predicted.label} | gold {turn.gold.argmax().label}]"
          f" {turn.text}")
