"""Reverse-mode automatic differentiation over dense float64 arrays.

A Tape records one closure per primitive operation, in creation order.
``backward`` seeds the loss gradient with 1 and replays the closures in
exact reverse creation order, leaving d(loss)/d(tensor) in ``grad`` for
every tensor that fed the loss. Tensors built without a tape run the
identical forward arithmetic with nothing recorded; that is the
inference path.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, EmptyInputError

PROB_FLOOR = 1e-12


class Tape:
    """Ordered record of primitive operations for one backward pass."""

    __slots__ = ("_nodes",)

    def __init__(self):
        self._nodes: list[Callable[[], None]] = []

    def __len__(self):
        return len(self._nodes)

    def record(self, fn: Callable[[], None]) -> None:
        self._nodes.append(fn)

    def backward(self, loss: "Tensor") -> None:
        """Accumulate gradients of a scalar loss into every contributing tensor."""
        if loss.tape is not self:
            raise ValueError("loss was not recorded on this tape")
        if loss.data.shape != ():
            raise DimensionError(f"backward requires a scalar loss, got shape {loss.data.shape}")
        loss._grad = np.asarray(1.0)
        for fn in reversed(self._nodes):
            fn()


class Tensor:
    """A dense float64 array, optionally recorded on a Tape."""

    __slots__ = ("data", "tape", "_grad")

    def __init__(self, data, tape: Tape | None = None):
        if isinstance(data, np.ndarray) and data.dtype == np.float64:
            self.data = data
        else:
            self.data = np.asarray(data, dtype=np.float64)
        self.tape = tape
        self._grad: np.ndarray | None = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def grad(self) -> np.ndarray:
        """Accumulated gradient; exactly zero for tensors the loss never used."""
        if self._grad is None:
            return np.zeros_like(self.data)
        return self._grad

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, tape={'yes' if self.tape else 'no'})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __neg__(self):
        return neg(self)


def _wrap(x) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


def _tape_of(*tensors: Tensor) -> Tape | None:
    tape = None
    for t in tensors:
        if t.tape is not None:
            if tape is None:
                tape = t.tape
            elif tape is not t.tape:
                raise ValueError("operands were recorded on different tapes")
    return tape


def _accum(t: Tensor, g: np.ndarray) -> None:
    if t._grad is None:
        t._grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t._grad += g


def _reduce_to(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    if shape == ():
        return g.sum()
    raise DimensionError(f"cannot reduce gradient of shape {g.shape} to {shape}")


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape and a.data.shape != () and b.data.shape != ():
        raise DimensionError(f"{op}: incompatible shapes {a.data.shape} and {b.data.shape}")


def zeros(*shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=np.float64))


def add(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast(a, b, "add")
    tape = _tape_of(a, b)
    out = Tensor(a.data + b.data, tape)
    if tape is not None:
        def backward(a=a, b=b, out=out):
            g = out._grad
            if g is None:
                return
            _accum(a, _reduce_to(g, a.data.shape))
            _accum(b, _reduce_to(g, b.data.shape))
        tape.record(backward)
    return out


def sub(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast(a, b, "sub")
    tape = _tape_of(a, b)
    out = Tensor(a.data - b.data, tape)
    if tape is not None:
        def backward(a=a, b=b, out=out):
            g = out._grad
            if g is None:
                return
            _accum(a, _reduce_to(g, a.data.shape))
            _accum(b, _reduce_to(-g, b.data.shape))
        tape.record(backward)
    return out


def mul(a, b) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    _check_broadcast(a, b, "mul")
    tape = _tape_of(a, b)
    out = Tensor(a.data * b.data, tape)
    if tape is not None:
        def backward(a=a, b=b, out=out):
            g = out._grad
            if g is None:
                return
            _accum(a, _reduce_to(g * b.data, a.data.shape))
            _accum(b, _reduce_to(g * a.data, b.data.shape))
        tape.record(backward)
    return out


def neg(a) -> Tensor:
    a = _wrap(a)
    tape = a.tape
    out = Tensor(-a.data, tape)
    if tape is not None:
        def backward(a=a, out=out):
            g = out._grad
            if g is None:
                return
            _accum(a, -g)
        tape.record(backward)
    return out


def matvec(w: Tensor, x: Tensor) -> Tensor:
    """w @ x for w of shape (m, n) and x of shape (n,)."""
    w, x = _wrap(w), _wrap(x)
    if w.data.ndim != 2 or x.data.ndim != 1 or w.data.shape[1] != x.data.shape[0]:
        raise DimensionError(f"matvec: incompatible shapes {w.data.shape} and {x.data.shape}")
    tape = _tape_of(w, x)
    out = Tensor(w.data @ x.data, tape)
    if tape is not None:
        def backward(w=w, x=x, out=out):
            g = out._grad
            if g is None:
                return
            _accum(w, np.outer(g, x.data))
            _accum(x, w.data.T @ g)
        tape.record(backward)
    return out


def vecmat(x: Tensor, m: Tensor) -> Tensor:
    """x @ m for x of shape (k,) and m of shape (k, d)."""
    x, m = _wrap(x), _wrap(m)
    if x.data.ndim != 1 or m.data.ndim != 2 or x.data.shape[0] != m.data.shape[0]:
        raise DimensionError(f"vecmat: incompatible shapes {x.data.shape} and {m.data.shape}")
    tape = _tape_of(x, m)
    out = Tensor(x.data @ m.data, tape)
    if tape is not None:
        def backward(x=x, m=m, out=out):
            g = out._grad
            if g is None:
                return
            _accum(x, m.data @ g)
            _accum(m, np.outer(x.data, g))
        tape.record(backward)
    return out


def matmul_nt(a: Tensor, b: Tensor) -> Tensor:
    """a @ b.T for a of shape (p, q) and b of shape (r, q)."""
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[1]:
        raise DimensionError(f"matmul_nt: incompatible shapes {a.data.shape} and {b.data.shape}")
    tape = _tape_of(a, b)
    out = Tensor(a.data @ b.data.T, tape)
    if tape is not None:
        def backward(a=a, b=b, out=out):
            g = out._grad
            if g is None:
                return
            _accum(a, g @ b.data)
            _accum(b, g.T @ a.data)
        tape.record(backward)
    return out


def dot(a: Tensor, b: Tensor) -> Tensor:
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim != 1 or b.data.ndim != 1 or a.data.shape != b.data.shape:
        raise DimensionError(f"dot: incompatible shapes {a.data.shape} and {b.data.shape}")
    tape = _tape_of(a, b)
    out = Tensor(np.asarray(a.data @ b.data), tape)
    if tape is not None:
        def backward(a=a, b=b, out=out):
            g = out._grad
            if g is None:
                return
            _accum(a, g * b.data)
            _accum(b, g * a.data)
        tape.record(backward)
    return out


def concat(parts: Sequence[Tensor]) -> Tensor:
    parts = [_wrap(p) for p in parts]
    if not parts:
        raise EmptyInputError("concat of no tensors")
    for p in parts:
        if p.data.ndim != 1:
            raise DimensionError("concat expects 1-d tensors")
    tape = _tape_of(*parts)
    out = Tensor(np.concatenate([p.data for p in parts]), tape)
    if tape is not None:
        sizes = [p.data.shape[0] for p in parts]

        def backward(parts=parts, sizes=sizes, out=out):
            g = out._grad
            if g is None:
                return
            offset = 0
            for p, n in zip(parts, sizes):
                _accum(p, g[offset:offset + n])
                offset += n
        tape.record(backward)
    return out


def stack(parts: Sequence[Tensor]) -> Tensor:
    """Stack equal-shape tensors along a new leading axis."""
    parts = [_wrap(p) for p in parts]
    if not parts:
        raise EmptyInputError("stack of no tensors")
    shape = parts[0].data.shape
    for p in parts:
        if p.data.shape != shape:
            raise DimensionError("stack expects equal shapes")
    tape = _tape_of(*parts)
    out = Tensor(np.stack([p.data for p in parts]), tape)
    if tape is not None:
        def backward(parts=parts, out=out):
            g = out._grad
            if g is None:
                return
            for i, p in enumerate(parts):
                _accum(p, g[i])
        tape.record(backward)
    return out


def row(m: Tensor, i: int) -> Tensor:
    """Row i of a matrix, as a vector."""
    if m.data.ndim != 2:
        raise DimensionError("row expects a matrix")
    tape = m.tape
    out = Tensor(m.data[i], tape)
    if tape is not None:
        def backward(m=m, i=i, out=out):
            g = out._grad
            if g is None:
                return
            if m._grad is None:
                m._grad = np.zeros_like(m.data)
            m._grad[i] += g
        tape.record(backward)
    return out


def rows(m: Tensor, ids: Sequence[int]) -> Tensor:
    """Rows of a matrix gathered by index; repeated ids accumulate gradient."""
    if m.data.ndim != 2:
        raise DimensionError("rows expects a matrix")
    idx = np.asarray(ids, dtype=np.intp)
    tape = m.tape
    out = Tensor(m.data[idx], tape)
    if tape is not None:
        def backward(m=m, idx=idx, out=out):
            g = out._grad
            if g is None:
                return
            if m._grad is None:
                m._grad = np.zeros_like(m.data)
            np.add.at(m._grad, idx, g)
        tape.record(backward)
    return out


def add_rowvec(m: Tensor, v: Tensor) -> Tensor:
    """Add a vector to every row of a matrix."""
    m, v = _wrap(m), _wrap(v)
    if m.data.ndim != 2 or v.data.ndim != 1 or m.data.shape[1] != v.data.shape[0]:
        raise DimensionError(f"add_rowvec: incompatible shapes {m.data.shape} and {v.data.shape}")
    tape = _tape_of(m, v)
    out = Tensor(m.data + v.data, tape)
    if tape is not None:
        def backward(m=m, v=v, out=out):
            g = out._grad
            if g is None:
                return
            _accum(m, g)
            _accum(v, g.sum(axis=0))
        tape.record(backward)
    return out


def tanh(x: Tensor) -> Tensor:
    x = _wrap(x)
    tape = x.tape
    data = np.tanh(x.data)
    out = Tensor(data, tape)
    if tape is not None:
        def backward(x=x, data=data, out=out):
            g = out._grad
            if g is None:
                return
            _accum(x, g * (1.0 - data * data))
        tape.record(backward)
    return out


def sigmoid(x: Tensor) -> Tensor:
    x = _wrap(x)
    tape = x.tape
    d = x.data
    data = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))),
                    np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))
    out = Tensor(data, tape)
    if tape is not None:
        def backward(x=x, data=data, out=out):
            g = out._grad
            if g is None:
                return
            _accum(x, g * data * (1.0 - data))
        tape.record(backward)
    return out


def softmax(x: Tensor) -> Tensor:
    """Probability vector from logits, stabilized by max subtraction."""
    x = _wrap(x)
    if x.data.ndim != 1 or x.data.size == 0:
        raise EmptyInputError("softmax expects a nonempty vector")
    e = np.exp(x.data - x.data.max())
    s = e / e.sum()
    tape = x.tape
    out = Tensor(s, tape)
    if tape is not None:
        def backward(x=x, s=s, out=out):
            g = out._grad
            if g is None:
                return
            _accum(x, s * (g - np.dot(g, s)))
        tape.record(backward)
    return out


def log(x: Tensor, floor: float = PROB_FLOOR) -> Tensor:
    """Natural log with the argument clamped below at ``floor``."""
    x = _wrap(x)
    clamped = np.maximum(x.data, floor)
    tape = x.tape
    out = Tensor(np.log(clamped), tape)
    if tape is not None:
        def backward(x=x, clamped=clamped, floor=floor, out=out):
            g = out._grad
            if g is None:
                return
            _accum(x, g * (x.data > floor) / clamped)
        tape.record(backward)
    return out


def sum_all(x: Tensor) -> Tensor:
    x = _wrap(x)
    tape = x.tape
    out = Tensor(np.asarray(x.data.sum()), tape)
    if tape is not None:
        def backward(x=x, out=out):
            g = out._grad
            if g is None:
                return
            _accum(x, np.broadcast_to(g, x.data.shape))
        tape.record(backward)
    return out


def cross_entropy(predicted: Tensor, target) -> Tensor:
    """-sum(target * log(predicted)) with the probability floor folded in.

    The target is treated as a constant distribution; no gradient flows to it.
    """
    predicted = _wrap(predicted)
    tgt = target.data if isinstance(target, Tensor) else np.asarray(target, dtype=np.float64)
    if predicted.data.ndim != 1 or tgt.ndim != 1 or predicted.data.shape != tgt.shape:
        raise DimensionError(
            f"cross_entropy: incompatible shapes {predicted.data.shape} and {tgt.shape}")
    q = np.maximum(predicted.data, PROB_FLOOR)
    tape = predicted.tape
    out = Tensor(np.asarray(-(tgt @ np.log(q))), tape)
    if tape is not None:
        def backward(predicted=predicted, tgt=tgt, q=q, out=out):
            g = out._grad
            if g is None:
                return
            _accum(predicted, g * (-(tgt / q)) * (predicted.data > PROB_FLOOR))
        tape.record(backward)
    return out


def cosine(a, b) -> float:
    """Cosine similarity of two equal-length vectors; 0.0 if either is zero."""
    va = a.data if isinstance(a, Tensor) else np.asarray(a, dtype=np.float64)
    vb = b.data if isinstance(b, Tensor) else np.asarray(b, dtype=np.float64)
    if va.ndim != 1 or vb.ndim != 1 or va.shape != vb.shape:
        raise DimensionError(f"cosine: incompatible shapes {va.shape} and {vb.shape}")
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(va @ vb / (na * nb), -1.0, 1.0))


class ParameterStore:
    """Ordered mapping of names to float64 arrays; the single home of weights.

    ``bind`` produces fresh leaf tensors that alias the stored arrays, so
    in-place optimizer updates and finite-difference probes are visible to
    subsequent binds without copying.
    """

    def __init__(self):
        self._arrays: dict[str, np.ndarray] = {}

    def add(self, name: str, array: np.ndarray) -> np.ndarray:
        if name in self._arrays:
            raise ValueError(f"duplicate parameter name {name!r}")
        arr = np.asarray(array, dtype=np.float64)
        self._arrays[name] = arr
        return arr

    def replace(self, name: str, array: np.ndarray) -> None:
        """Point an existing entry at another array object, e.g. to share a
        table between two stores. Shape must match."""
        if name not in self._arrays:
            raise KeyError(name)
        arr = np.asarray(array, dtype=np.float64)
        if arr.shape != self._arrays[name].shape:
            raise DimensionError(f"parameter {name!r}: shape {arr.shape} does not "
                                 f"match {self._arrays[name].shape}")
        self._arrays[name] = arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self._arrays[name]

    def __contains__(self, name: str) -> bool:
        return name in self._arrays

    def __len__(self):
        return len(self._arrays)

    def names(self) -> list[str]:
        return list(self._arrays)

    def items(self):
        return self._arrays.items()

    def bind(self, tape: Tape | None = None) -> dict[str, Tensor]:
        return {name: Tensor(arr, tape) for name, arr in self._arrays.items()}

    def copy(self) -> "ParameterStore":
        dup = ParameterStore()
        for name, arr in self._arrays.items():
            dup.add(name, arr.copy())
        return dup

    def load_state(self, state: Mapping[str, np.ndarray]) -> None:
        """Overwrite every array in place from a same-shaped state mapping."""
        for name, arr in self._arrays.items():
            src = np.asarray(state[name], dtype=np.float64)
            if src.shape != arr.shape:
                raise DimensionError(f"parameter {name!r}: shape {src.shape} != {arr.shape}")
            arr[...] = src
