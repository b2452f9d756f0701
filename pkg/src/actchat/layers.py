"""Recurrent, attention, and optimizer building blocks shared by all networks.

Gate convention for the GRU cell:

    z = sigmoid(Wz x + Uz h + bz)
    r = sigmoid(Wr x + Ur h + br)
    c = tanh(Wh x + Uh (r * h) + bh)
    h' = (1 - z) * h + z * c

Matrices are initialized uniformly in [-0.08, 0.08], biases at zero.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from . import tape as T
from .errors import DimensionError, EmptyInputError
from .tape import ParameterStore, Tape, Tensor

INIT_SCALE = 0.08


def uniform_init(rng: np.random.Generator, *shape: int, scale: float = INIT_SCALE) -> np.ndarray:
    return rng.uniform(-scale, scale, shape)


class GruCell:
    """One gated recurrent unit bound to named tensors from a store."""

    FIELDS = ("wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh")

    def __init__(self, params: Mapping[str, Tensor], prefix: str):
        for f in self.FIELDS:
            setattr(self, f, params[f"{prefix}.{f}"])
        self.hidden_size = self.wz.data.shape[0]
        self.input_size = self.wz.data.shape[1]

    @staticmethod
    def init(store: ParameterStore, prefix: str, input_size: int, hidden_size: int,
             rng: np.random.Generator) -> None:
        for gate in ("z", "r", "h"):
            store.add(f"{prefix}.w{gate}", uniform_init(rng, hidden_size, input_size))
            store.add(f"{prefix}.u{gate}", uniform_init(rng, hidden_size, hidden_size))
            store.add(f"{prefix}.b{gate}", np.zeros(hidden_size))

    def step(self, prev_state: Tensor, x: Tensor) -> Tensor:
        if prev_state.data.shape != (self.hidden_size,):
            raise DimensionError(
                f"gru_step: state has shape {prev_state.data.shape}, cell expects ({self.hidden_size},)")
        if x.data.shape != (self.input_size,):
            raise DimensionError(
                f"gru_step: input has shape {x.data.shape}, cell expects ({self.input_size},)")
        z = T.sigmoid(T.matvec(self.wz, x) + T.matvec(self.uz, prev_state) + self.bz)
        r = T.sigmoid(T.matvec(self.wr, x) + T.matvec(self.ur, prev_state) + self.br)
        cand = T.tanh(T.matvec(self.wh, x) + T.matvec(self.uh, r * prev_state) + self.bh)
        return (1.0 - z) * prev_state + z * cand


def gru_step(cell: GruCell, prev_state: Tensor, x: Tensor) -> Tensor:
    return cell.step(prev_state, x)


def bigru_states(fwd: GruCell, bwd: GruCell, inputs: Sequence[Tensor]):
    """Forward and backward state sequences over the input positions."""
    if len(inputs) == 0:
        raise EmptyInputError("bigru_encode of an empty sequence")
    h = T.zeros(fwd.hidden_size)
    fwd_states = []
    for x in inputs:
        h = fwd.step(h, x)
        fwd_states.append(h)
    h = T.zeros(bwd.hidden_size)
    bwd_states: list[Tensor] = [None] * len(inputs)  # type: ignore[list-item]
    for j in range(len(inputs) - 1, -1, -1):
        h = bwd.step(h, inputs[j])
        bwd_states[j] = h
    return fwd_states, bwd_states


def bigru_encode(fwd: GruCell, bwd: GruCell, inputs: Sequence[Tensor]) -> list[Tensor]:
    """Per-position states [forward_j ; backward_j] of a bidirectional GRU."""
    fwd_states, bwd_states = bigru_states(fwd, bwd, inputs)
    return [T.concat([f, b]) for f, b in zip(fwd_states, bwd_states)]


class Attention:
    """Additive attention: score(k) = v . tanh(W [enc_k ; dec]).

    The score matrix over the concatenation [enc_k ; dec] is stored as its
    two column blocks ``w_enc`` and ``w_dec``, which is the same map.
    """

    def __init__(self, params: Mapping[str, Tensor], prefix: str):
        self.v = params[f"{prefix}.v"]
        self.w_enc = params[f"{prefix}.w_enc"]
        self.w_dec = params[f"{prefix}.w_dec"]

    @staticmethod
    def init(store: ParameterStore, prefix: str, enc_size: int, dec_size: int,
             att_size: int, rng: np.random.Generator) -> None:
        store.add(f"{prefix}.v", uniform_init(rng, att_size))
        store.add(f"{prefix}.w_enc", uniform_init(rng, att_size, enc_size))
        store.add(f"{prefix}.w_dec", uniform_init(rng, att_size, dec_size))

    def project(self, enc: Tensor) -> Tensor:
        """Encoder-side projection, computable once per decoded sequence."""
        return T.matmul_nt(enc, self.w_enc)

    def attend(self, enc: Tensor, proj: Tensor, decoder_state: Tensor):
        scores = T.matvec(T.tanh(T.add_rowvec(proj, T.matvec(self.w_dec, decoder_state))), self.v)
        weights = T.softmax(scores)
        context = T.vecmat(weights, enc)
        return context, weights


def attention_context(att: Attention, encoder_states, decoder_state: Tensor):
    """Context vector and softmax weights over a sequence of encoder states."""
    if isinstance(encoder_states, Tensor):
        enc = encoder_states
    else:
        if len(encoder_states) == 0:
            raise EmptyInputError("attention over an empty encoder sequence")
        enc = T.stack(list(encoder_states))
    return att.attend(enc, att.project(enc), decoder_state)


class Mlp2:
    """Two-layer perceptron with a tanh hidden layer, returning raw logits."""

    def __init__(self, params: Mapping[str, Tensor], prefix: str):
        self.w1 = params[f"{prefix}.w1"]
        self.b1 = params[f"{prefix}.b1"]
        self.w2 = params[f"{prefix}.w2"]
        self.b2 = params[f"{prefix}.b2"]

    @staticmethod
    def init(store: ParameterStore, prefix: str, in_size: int, hidden_size: int,
             out_size: int, rng: np.random.Generator) -> None:
        store.add(f"{prefix}.w1", uniform_init(rng, hidden_size, in_size))
        store.add(f"{prefix}.b1", np.zeros(hidden_size))
        store.add(f"{prefix}.w2", uniform_init(rng, out_size, hidden_size))
        store.add(f"{prefix}.b2", np.zeros(out_size))

    def logits(self, x: Tensor) -> Tensor:
        hidden = T.tanh(T.matvec(self.w1, x) + self.b1)
        return T.matvec(self.w2, hidden) + self.b2


class AdaDelta:
    """AdaDelta update rule with per-parameter running averages.

    Keeps E[g^2] and E[dx^2]; the step is
    dx = -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g, scaled by ``lr``.
    """

    def __init__(self, store: ParameterStore, rho: float = 0.95,
                 epsilon: float = 1e-6, lr: float = 1.0):
        self.store = store
        self.rho = rho
        self.epsilon = epsilon
        self.lr = lr
        self.avg_sq_grad = {name: np.zeros_like(arr) for name, arr in store.items()}
        self.avg_sq_update = {name: np.zeros_like(arr) for name, arr in store.items()}

    def step(self, grads: Mapping[str, np.ndarray]) -> None:
        rho, eps = self.rho, self.epsilon
        for name, g in grads.items():
            eg = self.avg_sq_grad[name]
            ex = self.avg_sq_update[name]
            eg *= rho
            eg += (1.0 - rho) * g * g
            delta = -np.sqrt(ex + eps) / np.sqrt(eg + eps) * g
            ex *= rho
            ex += (1.0 - rho) * delta * delta
            arr = self.store[name]
            arr += self.lr * delta


def adadelta_update(state: AdaDelta, grads: Mapping[str, np.ndarray]) -> ParameterStore:
    """Apply one AdaDelta step in place and return the updated store."""
    state.step(grads)
    return state.store


class Sgd:
    """Plain gradient descent with a fixed learning rate."""

    def __init__(self, store: ParameterStore, lr: float):
        self.store = store
        self.lr = lr

    def step(self, grads: Mapping[str, np.ndarray]) -> None:
        if self.lr == 0.0:
            return
        for name, g in grads.items():
            arr = self.store[name]
            arr -= self.lr * g


def grad_check(loss_fn: Callable[[Mapping[str, Tensor]], Tensor], store: ParameterStore,
               epsilon: float = 1e-5) -> float:
    """Worst relative error between tape gradients and central differences.

    ``loss_fn`` must build a scalar loss from bound leaf tensors and be
    deterministic. Relative error uses max(|fd|, |tape|, 1e-5) as the
    denominator so near-zero partials compare on an absolute scale.
    """
    tp = Tape()
    leaves = store.bind(tp)
    loss = loss_fn(leaves)
    tp.backward(loss)
    analytic = {name: leaves[name].grad.copy() for name in store.names()}

    worst = 0.0
    for name in store.names():
        arr = store[name]
        flat = arr.reshape(-1)
        gf = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            f_plus = float(loss_fn(store.bind(None)).data)
            flat[i] = orig - epsilon
            f_minus = float(loss_fn(store.bind(None)).data)
            flat[i] = orig
            fd = (f_plus - f_minus) / (2.0 * epsilon)
            err = abs(fd - gf[i]) / max(abs(fd), abs(gf[i]), 1e-5)
            worst = max(worst, err)
    return worst
