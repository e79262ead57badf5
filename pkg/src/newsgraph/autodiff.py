"""Tape-based reverse-mode differentiation on small dense arrays.

Everything is float64 and rank 0..2. The op set is exactly what the GRU /
attention / transformer stack above needs, nothing more. Recording happens
only inside a ``with Tape():`` block; outside a block the same ops run
forward-only, which is how frozen parts of the model are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Tensor",
    "Tape",
    "TapeError",
    "AdamState",
    "adam_step",
    "finite_diff_check",
    "relative_error",
    "set_check_finite",
    "matmul",
    "transpose",
    "add",
    "sub",
    "mul",
    "tanh",
    "sigmoid",
    "exp",
    "log",
    "relu",
    "clip_min",
    "one_minus",
    "softmax",
    "masked_softmax",
    "concat_cols",
    "stack_rows",
    "row",
    "gather_rows",
    "take_per_row",
    "mean_rows",
    "max_rows",
    "layer_norm",
    "total_sum",
]

_ACTIVE_TAPE: "Tape | None" = None
_CHECK_FINITE = False


def set_check_finite(enabled: bool) -> None:
    """Debug switch: verify every op output is finite (slow, off by default)."""
    global _CHECK_FINITE
    _CHECK_FINITE = bool(enabled)


class TapeError(RuntimeError):
    pass


class Tensor:
    """A float64 array with an optional gradient slot."""

    __slots__ = ("data", "grad", "requires_grad", "tape", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim > 2:
            raise ValueError(f"rank {arr.ndim} tensor not supported (max 2)")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.tape: Tape | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def accumulate(self, g: np.ndarray) -> None:
        self.grad = g.copy() if self.grad is None else self.grad + g

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"


@dataclass
class _Node:
    kind: str
    inputs: tuple
    out: Tensor
    backward: object  # callable(g) accumulating into input tensors


class Tape:
    """Append-only record of ops. Backprop is a single reverse pass."""

    def __init__(self):
        self._nodes: list[_Node] = []
        self.backward_visits = 0

    def __len__(self) -> int:
        return len(self._nodes)

    def __enter__(self) -> "Tape":
        global _ACTIVE_TAPE
        if _ACTIVE_TAPE is not None:
            raise TapeError("nested tapes are not supported")
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, *exc) -> None:
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = None

    def backprop(self, loss: Tensor) -> None:
        """Seed d(loss)/d(loss)=1 and sweep the tape once, newest op first.

        Gradients accumulate into every recorded tensor on the path to a
        requires_grad leaf; leaves keep theirs until zero_grad.
        """
        if loss.tape is not self:
            raise TapeError("loss was not recorded on this tape")
        if loss.data.shape != ():
            raise TapeError(f"loss must be scalar, got shape {loss.data.shape}")
        loss.grad = np.ones(())
        self.backward_visits = 0
        for node in reversed(self._nodes):
            self.backward_visits += 1
            g = node.out.grad
            if g is None:
                continue
            node.backward(g)


def _check_input(kind: str, x: Tensor) -> None:
    if x.tape is not None and x.tape is not _ACTIVE_TAPE:
        raise TapeError(f"{kind}: input tensor belongs to a different tape")


def _record(kind: str, inputs: tuple, out_data: np.ndarray, backward) -> Tensor:
    for x in inputs:
        _check_input(kind, x)
    if _CHECK_FINITE and not np.all(np.isfinite(out_data)):
        raise FloatingPointError(f"{kind}: non-finite output")
    out = Tensor(out_data)
    out.requires_grad = any(x.requires_grad for x in inputs)
    tape = _ACTIVE_TAPE
    if tape is not None and out.requires_grad:
        out.tape = tape
        tape._nodes.append(_Node(kind, inputs, out, backward))
    return out


# ---------------------------------------------------------------- arithmetic


def matmul(a: Tensor, b: Tensor) -> Tensor:
    A, B = a.data, b.data
    out = A @ B

    def bwd(g):
        if A.ndim == 2 and B.ndim == 2:
            if a.requires_grad:
                a.accumulate(g @ B.T)
            if b.requires_grad:
                b.accumulate(A.T @ g)
        elif A.ndim == 2 and B.ndim == 1:
            if a.requires_grad:
                a.accumulate(np.outer(g, B))
            if b.requires_grad:
                b.accumulate(A.T @ g)
        elif A.ndim == 1 and B.ndim == 2:
            if a.requires_grad:
                a.accumulate(B @ g)
            if b.requires_grad:
                b.accumulate(np.outer(A, g))
        else:  # dot product
            if a.requires_grad:
                a.accumulate(g * B)
            if b.requires_grad:
                b.accumulate(g * A)

    return _record("matmul", (a, b), out, bwd)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise ValueError("transpose expects a matrix")

    def bwd(g):
        if a.requires_grad:
            a.accumulate(g.T)

    return _record("transpose", (a,), a.data.T.copy(), bwd)


def _binary(kind, a, b, fwd, da, db):
    """Shared shape handling for add/sub/mul with an optional float rhs."""
    if isinstance(b, (int, float)):
        out = fwd(a.data, float(b))

        def bwd(g):
            if a.requires_grad:
                a.accumulate(da(g, a.data, float(b)))

        return _record(kind, (a,), out, bwd)

    A, B = a.data, b.data
    if A.shape == B.shape:
        out = fwd(A, B)

        def bwd(g):
            if a.requires_grad:
                a.accumulate(da(g, A, B))
            if b.requires_grad:
                b.accumulate(db(g, A, B))

        return _record(kind, (a, b), out, bwd)

    if A.ndim == 2 and B.ndim == 1 and A.shape[1] == B.shape[0]:
        out = fwd(A, B)  # row-broadcast, e.g. bias over a matrix

        def bwd(g):
            if a.requires_grad:
                a.accumulate(da(g, A, B))
            if b.requires_grad:
                b.accumulate(db(g, A, B).sum(axis=0))

        return _record(kind, (a, b), out, bwd)

    raise ValueError(f"{kind}: incompatible shapes {A.shape} and {B.shape}")


def add(a: Tensor, b) -> Tensor:
    return _binary(
        "add", a, b,
        lambda A, B: A + B,
        lambda g, A, B: g,
        lambda g, A, B: g,
    )


def sub(a: Tensor, b) -> Tensor:
    return _binary(
        "sub", a, b,
        lambda A, B: A - B,
        lambda g, A, B: g,
        lambda g, A, B: -g,
    )


def mul(a: Tensor, b) -> Tensor:
    """Elementwise product; b may be a python float (scaling)."""
    return _binary(
        "mul", a, b,
        lambda A, B: A * B,
        lambda g, A, B: g * B,
        lambda g, A, B: g * A,
    )


def one_minus(a: Tensor) -> Tensor:
    return add(mul(a, -1.0), 1.0)


# ---------------------------------------------------------------- pointwise


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def bwd(g):
        if a.requires_grad:
            a.accumulate(g * (1.0 - out * out))

    return _record("tanh", (a,), out, bwd)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                   np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

    def bwd(g):
        if a.requires_grad:
            a.accumulate(g * out * (1.0 - out))

    return _record("sigmoid", (a,), out, bwd)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def bwd(g):
        if a.requires_grad:
            a.accumulate(g * out)

    return _record("exp", (a,), out, bwd)


def log(a: Tensor) -> Tensor:
    def bwd(g):
        if a.requires_grad:
            a.accumulate(g / a.data)

    return _record("log", (a,), np.log(a.data), bwd)


def relu(a: Tensor) -> Tensor:
    def bwd(g):
        if a.requires_grad:
            a.accumulate(g * (a.data > 0))

    return _record("relu", (a,), np.maximum(a.data, 0.0), bwd)


def clip_min(a: Tensor, lo: float) -> Tensor:
    """max(a, lo); gradient is zero where the floor is active."""
    def bwd(g):
        if a.requires_grad:
            a.accumulate(g * (a.data > lo))

    return _record("clip_min", (a,), np.maximum(a.data, lo), bwd)


# ---------------------------------------------------------------- softmax


def softmax(a: Tensor) -> Tensor:
    """Softmax over a vector, or independently over each row of a matrix."""
    x = a.data
    if x.ndim == 1:
        e = np.exp(x - x.max())
        out = e / e.sum()

        def bwd(g):
            if a.requires_grad:
                a.accumulate(out * (g - np.dot(g, out)))

        return _record("softmax", (a,), out, bwd)

    e = np.exp(x - x.max(axis=1, keepdims=True))
    out = e / e.sum(axis=1, keepdims=True)

    def bwd2(g):
        if a.requires_grad:
            a.accumulate(out * (g - (g * out).sum(axis=1, keepdims=True)))

    return _record("softmax", (a,), out, bwd2)


def masked_softmax(a: Tensor, valid: np.ndarray) -> Tensor:
    """Row softmax over the columns where ``valid`` is true; rest get weight 0."""
    x = a.data
    if x.ndim != 2:
        raise ValueError("masked_softmax expects a matrix")
    valid = np.asarray(valid, dtype=bool)
    if valid.shape != (x.shape[1],):
        raise ValueError("mask must have one flag per column")
    if not valid.any():
        raise ValueError("masked_softmax: every column is masked")
    shifted = x - x[:, valid].max(axis=1, keepdims=True)
    e = np.exp(shifted) * valid
    out = e / e.sum(axis=1, keepdims=True)

    def bwd(g):
        if a.requires_grad:
            a.accumulate(out * (g - (g * out).sum(axis=1, keepdims=True)))

    return _record("masked_softmax", (a,), out, bwd)


# ---------------------------------------------------------------- reshaping


def concat_cols(parts) -> Tensor:
    parts = list(parts)
    datas = [p.data for p in parts]
    if all(d.ndim == 1 for d in datas):
        out = np.concatenate(datas)
        axis = 0
    elif all(d.ndim == 2 for d in datas):
        out = np.hstack(datas)
        axis = 1
    else:
        raise ValueError("concat_cols: mixed ranks")
    widths = [d.shape[-1] for d in datas]

    def bwd(g):
        at = 0
        for p, w in zip(parts, widths):
            if p.requires_grad:
                piece = g[at:at + w] if axis == 0 else g[:, at:at + w]
                p.accumulate(piece)
            at += w

    return _record("concat_cols", tuple(parts), out, bwd)


def stack_rows(rows) -> Tensor:
    rows = list(rows)
    if not all(r.data.ndim == 1 for r in rows):
        raise ValueError("stack_rows expects vectors")
    out = np.stack([r.data for r in rows])

    def bwd(g):
        for i, r in enumerate(rows):
            if r.requires_grad:
                r.accumulate(g[i])

    return _record("stack_rows", tuple(rows), out, bwd)


def row(a: Tensor, i: int) -> Tensor:
    if a.data.ndim != 2:
        raise ValueError("row expects a matrix")

    def bwd(g):
        if a.requires_grad:
            da = np.zeros_like(a.data)
            da[i] = g
            a.accumulate(da)

    return _record("row", (a,), a.data[i].copy(), bwd)


def gather_rows(a: Tensor, idx) -> Tensor:
    """Select rows by index; repeated indices accumulate sparse gradients.

    Doubles as the embedding lookup: a is the table, idx the token ids.
    """
    idx = np.asarray(idx, dtype=np.intp)
    if a.data.ndim != 2:
        raise ValueError("gather_rows expects a matrix")

    def bwd(g):
        if a.requires_grad:
            da = np.zeros_like(a.data)
            np.add.at(da, idx, g)
            a.accumulate(da)

    return _record("gather_rows", (a,), a.data[idx].copy(), bwd)


def take_per_row(a: Tensor, idx) -> Tensor:
    """Vector of a[i, idx[i]]; used to pick the labelled class probability."""
    idx = np.asarray(idx, dtype=np.intp)
    n = a.data.shape[0]
    rows_ix = np.arange(n)

    def bwd(g):
        if a.requires_grad:
            da = np.zeros_like(a.data)
            da[rows_ix, idx] = g
            a.accumulate(da)

    return _record("take_per_row", (a,), a.data[rows_ix, idx].copy(), bwd)


def mean_rows(a: Tensor, valid: np.ndarray | None = None) -> Tensor:
    if a.data.ndim != 2:
        raise ValueError("mean_rows expects a matrix")
    if valid is None:
        valid = np.ones(a.data.shape[0], dtype=bool)
    else:
        valid = np.asarray(valid, dtype=bool)
    n = int(valid.sum())
    if n == 0:
        raise ValueError("mean_rows: no valid rows")
    out = a.data[valid].mean(axis=0)

    def bwd(g):
        if a.requires_grad:
            da = np.zeros_like(a.data)
            da[valid] = g / n
            a.accumulate(da)

    return _record("mean_rows", (a,), out, bwd)


def max_rows(a: Tensor, valid: np.ndarray | None = None) -> Tensor:
    """Columnwise max over the valid rows. Ties send the whole adjoint to the
    lowest row index."""
    if a.data.ndim != 2:
        raise ValueError("max_rows expects a matrix")
    if valid is None:
        valid = np.ones(a.data.shape[0], dtype=bool)
    else:
        valid = np.asarray(valid, dtype=bool)
    rows_ix = np.flatnonzero(valid)
    if rows_ix.size == 0:
        raise ValueError("max_rows: no valid rows")
    sub_ = a.data[rows_ix]
    arg = sub_.argmax(axis=0)  # first occurrence = lowest index
    out = sub_[arg, np.arange(sub_.shape[1])].copy()

    def bwd(g):
        if a.requires_grad:
            da = np.zeros_like(a.data)
            da[rows_ix[arg], np.arange(sub_.shape[1])] = g
            a.accumulate(da)

    return _record("max_rows", (a,), out, bwd)


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row normalization followed by a learned affine map."""
    x = a.data
    if x.ndim != 2:
        raise ValueError("layer_norm expects a matrix")
    mu = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    out = xhat * gain.data + bias.data

    def bwd(g):
        gy = g * gain.data
        if a.requires_grad:
            m1 = gy.mean(axis=1, keepdims=True)
            m2 = (gy * xhat).mean(axis=1, keepdims=True)
            a.accumulate((gy - m1 - xhat * m2) * inv)
        if gain.requires_grad:
            gain.accumulate((g * xhat).sum(axis=0))
        if bias.requires_grad:
            bias.accumulate(g.sum(axis=0))

    return _record("layer_norm", (a, gain, bias), out, bwd)


def total_sum(a: Tensor) -> Tensor:
    def bwd(g):
        if a.requires_grad:
            a.accumulate(np.full_like(a.data, float(g)))

    return _record("total_sum", (a,), np.asarray(a.data.sum()), bwd)


# ---------------------------------------------------------------- optimizer


@dataclass
class AdamState:
    """First/second moment buffers, one pair per parameter."""

    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params) -> "AdamState":
        s = cls()
        for p in params:
            s.m.append(np.zeros_like(p.data))
            s.v.append(np.zeros_like(p.data))
        return s


def adam_step(params, grads, state: AdamState, lr: float = 5e-5,
              weight_decay: float = 5e-3) -> None:
    """One bias-corrected Adam update, decay folded into the gradient."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params/grads/state length mismatch")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            raise ValueError(f"missing gradient for parameter {i}")
        g = np.asarray(g, dtype=np.float64)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {i}")
        if weight_decay:
            g = g + weight_decay * p.data
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        mhat = state.m[i] / (1.0 - b1 ** state.t)
        vhat = state.v[i] / (1.0 - b2 ** state.t)
        p.data -= lr * mhat / (np.sqrt(vhat) + state.eps)


# ---------------------------------------------------------------- checking


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


def finite_diff_check(f, param: Tensor, eps: float = 1e-6) -> float:
    """Compare backprop against central differences, entry by entry.

    ``f`` must rebuild the forward pass from the current parameter values and
    return the scalar loss tensor. Returns the worst relative error over all
    entries of ``param``.
    """
    param.zero_grad()
    with Tape() as tape:
        loss = f()
    tape.backprop(loss)
    if param.grad is None:
        raise TapeError("parameter received no gradient")
    analytic = np.atleast_1d(np.asarray(param.grad, dtype=np.float64)).ravel()
    flat = param.data.reshape(-1)
    worst = 0.0
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = float(f().data)
        flat[i] = orig - eps
        down = float(f().data)
        flat[i] = orig
        numeric = (up - down) / (2.0 * eps)
        worst = max(worst, relative_error(float(analytic[i]), numeric))
    return worst
