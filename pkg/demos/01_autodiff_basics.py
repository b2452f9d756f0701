#!/usr/bin/env python3
"""A walk through the reverse-mode tape that powers every model here.

Build a tiny computation, run backward, and compare the tape's gradients
with central finite differences.
"""

import numpy as np

from actchat import tape as T
from actchat.layers import GruCell, grad_check
from actchat.tape import ParameterStore, Tape, Tensor

print("== scalars and vectors on the tape ==")
tape = Tape()
x = Tensor(np.array([0.5, -1.0, 2.0]), tape)
w = Tensor(np.arange(9, dtype=float).reshape(3, 3) / 10.0, tape)
loss = T.sum_all(T.tanh(T.matvec(w, x)) * T.tanh(T.matvec(w, x)))
tape.backward(loss)
print("loss:", loss.item())
print("d loss / d x:", x.grad)

print()
print("== the same gradients by finite differences ==")
store = ParameterStore()
store.add("x", np.array([0.5, -1.0, 2.0]))
store.add("w", np.arange(9, dtype=float).reshape(3, 3) / 10.0)


def loss_fn(p):
    h = T.tanh(T.matvec(p["w"], p["x"]))
    return T.sum_all(h * h)


err = grad_check(loss_fn, store, epsilon=1e-5)
print(f"worst relative error tape vs finite differences: {err:.2e}")

print()
print("== one GRU step, differentiable end to end ==")
store = ParameterStore()
rng = np.random.default_rng(0)
GruCell.init(store, "cell", input_size=4, hidden_size=3, rng=rng)
store.add("h0", rng.uniform(-0.5, 0.5, 3))
store.add("x0", rng.uniform(-0.5, 0.5, 4))


def gru_loss(p):
    out = GruCell(p, "cell").step(p["h0"], p["x0"])
    return T.sum_all(out * out)


print(f"worst relative error through the GRU: {grad_check(gru_loss, store):.2e}")
print("gradients that small mean the recurrent stack is safe to train on.")
