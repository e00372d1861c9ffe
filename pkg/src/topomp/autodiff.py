"""Minimal reverse-mode autodiff over dense/sparse matrix ops.

Values are float64 numpy arrays (2-d matrices, or 0-d for losses). Ops
executed inside a `with Tape():` block are recorded in execution order, which
is a valid topological order, so `backward` is a single reversed sweep with
deterministic accumulation. Outside a tape, ops just compute values.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Tape",
    "Tensor",
    "Parameter",
    "backward",
    "matmul",
    "spmm",
    "add",
    "sub",
    "hadamard",
    "scale",
    "maximum",
    "relu",
    "leaky_relu",
    "tanh",
    "sigmoid",
    "softmax_rows",
    "concat_cols",
    "reduce_rows",
    "gather_rows",
    "scale_rows",
    "add_row",
    "segment_reduce",
    "segment_softmax",
    "sum_all",
    "mse",
    "cross_entropy_logits",
    "sgd_step",
    "Adam",
    "grad_check",
    "zero_grads",
]

_ACTIVE: list["Tape"] = []


class Tape:
    """Recorded op list; enter as a context manager to enable gradients."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self) -> "Tape":
        _ACTIVE.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE.pop()
        return False


class Tensor:
    """A value node in the computation graph."""

    __slots__ = ("value", "grad", "_parents", "_vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = tuple(parents)
        self._vjp = vjp
        if vjp is not None and _ACTIVE:
            _ACTIVE[-1].nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape})"


class Parameter(Tensor):
    """A named leaf tensor whose gradient persists across backward calls."""

    __slots__ = ("name",)

    def __init__(self, value, name: str):
        super().__init__(value)
        self.name = name
        self.grad = np.zeros_like(self.value)

    def zero_grad(self):
        self.grad = np.zeros_like(self.value)

    def __repr__(self):
        return f"Parameter({self.name}, shape={self.value.shape})"


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def backward(tape: Tape, loss: Tensor):
    """Accumulate d(loss)/d(node) into .grad for every node on the tape and
    every leaf (Parameters keep their gradients, other grads are scratch)."""
    if loss.value.ndim != 0:
        raise ValueError(f"loss must be a scalar, got shape {loss.value.shape}")
    for node in tape.nodes:
        if not isinstance(node, Parameter):
            node.grad = None
    loss.grad = np.ones(())
    for node in reversed(tape.nodes):
        if node.grad is None or node._vjp is None:
            continue
        for parent, g in zip(node._parents, node._vjp(node.grad)):
            if g is None:
                continue
            if parent.grad is None:
                parent.grad = np.zeros_like(parent.value)
            parent.grad = parent.grad + g


def zero_grads(params: Iterable[Parameter]):
    for p in params:
        p.zero_grad()


# ---------------------------------------------------------------------------
# ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.value.shape[1] != b.value.shape[0]:
        raise ValueError(
            f"matmul dimension mismatch: {a.value.shape} x {b.value.shape}"
        )
    out = a.value @ b.value

    def vjp(g):
        return g @ b.value.T, a.value.T @ g

    return Tensor(out, (a, b), vjp)


def spmm(s, x: Tensor) -> Tensor:
    """Sparse (constant) times dense: s @ x."""
    x = _as_tensor(x)
    if s.shape[1] != x.value.shape[0]:
        raise ValueError(f"spmm dimension mismatch: {s.shape} x {x.value.shape}")
    st = s.T.tocsr()

    def vjp(g):
        return (st @ g,)

    return Tensor(s @ x.value, (x,), vjp)


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.value.shape != b.value.shape:
        raise ValueError(f"add shape mismatch: {a.value.shape} vs {b.value.shape}")
    return Tensor(a.value + b.value, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.value.shape != b.value.shape:
        raise ValueError(f"sub shape mismatch: {a.value.shape} vs {b.value.shape}")
    return Tensor(a.value - b.value, (a, b), lambda g: (g, -g))


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.value.shape != b.value.shape:
        raise ValueError(f"hadamard shape mismatch: {a.value.shape} vs {b.value.shape}")
    return Tensor(a.value * b.value, (a, b), lambda g: (g * b.value, g * a.value))


def scale(a: Tensor, c: float) -> Tensor:
    a = _as_tensor(a)
    return Tensor(a.value * c, (a,), lambda g: (g * c,))


def maximum(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise max; ties route the gradient to the first argument."""
    a, b = _as_tensor(a), _as_tensor(b)
    mask = a.value >= b.value
    return Tensor(
        np.where(mask, a.value, b.value),
        (a, b),
        lambda g: (g * mask, g * ~mask),
    )


def relu(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    mask = x.value > 0
    return Tensor(x.value * mask, (x,), lambda g: (g * mask,))


def leaky_relu(x: Tensor, alpha: float = 0.2) -> Tensor:
    x = _as_tensor(x)
    mask = x.value > 0
    slope = np.where(mask, 1.0, alpha)
    return Tensor(x.value * slope, (x,), lambda g: (g * slope,))


def tanh(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    y = np.tanh(x.value)
    return Tensor(y, (x,), lambda g: (g * (1.0 - y * y),))


def sigmoid(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    y = 1.0 / (1.0 + np.exp(-x.value))
    return Tensor(y, (x,), lambda g: (g * y * (1.0 - y),))


def softmax_rows(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    z = x.value - x.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=1, keepdims=True)

    def vjp(g):
        dot = (g * y).sum(axis=1, keepdims=True)
        return ((g - dot) * y,)

    return Tensor(y, (x,), vjp)


def concat_cols(parts: Sequence[Tensor]) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    widths = [p.value.shape[1] for p in parts]
    out = np.concatenate([p.value for p in parts], axis=1)

    def vjp(g):
        grads = []
        at = 0
        for w in widths:
            grads.append(g[:, at:at + w])
            at += w
        return tuple(grads)

    return Tensor(out, tuple(parts), vjp)


def reduce_rows(x: Tensor, op: str = "sum") -> Tensor:
    """Reduce over rows to a 1 x d row vector (sum, mean or max)."""
    x = _as_tensor(x)
    n = x.value.shape[0]
    if op == "sum":
        return Tensor(
            x.value.sum(axis=0, keepdims=True),
            (x,),
            lambda g: (np.repeat(g, n, axis=0),),
        )
    if op == "mean":
        if n == 0:
            return Tensor(np.zeros((1, x.value.shape[1])), (x,), lambda g: (np.zeros_like(x.value),))
        return Tensor(
            x.value.mean(axis=0, keepdims=True),
            (x,),
            lambda g: (np.repeat(g / n, n, axis=0),),
        )
    if op == "max":
        if n == 0:
            return Tensor(np.zeros((1, x.value.shape[1])), (x,), lambda g: (np.zeros_like(x.value),))
        idx = np.argmax(x.value, axis=0)

        def vjp(g):
            dx = np.zeros_like(x.value)
            dx[idx, np.arange(x.value.shape[1])] = g[0]
            return (dx,)

        return Tensor(x.value.max(axis=0, keepdims=True), (x,), vjp)
    raise ValueError(f"unknown row reduction: {op!r}")


def gather_rows(x: Tensor, idx) -> Tensor:
    x = _as_tensor(x)
    idx = np.asarray(idx, dtype=np.int64)

    def vjp(g):
        dx = np.zeros_like(x.value)
        np.add.at(dx, idx, g)
        return (dx,)

    return Tensor(x.value[idx], (x,), vjp)


def scale_rows(x: Tensor, v: Tensor) -> Tensor:
    """Scale row i of x by v[i]; v has shape (n, 1)."""
    x, v = _as_tensor(x), _as_tensor(v)
    if v.value.shape != (x.value.shape[0], 1):
        raise ValueError(f"scale_rows needs v of shape ({x.value.shape[0]}, 1), got {v.value.shape}")

    def vjp(g):
        return g * v.value, (g * x.value).sum(axis=1, keepdims=True)

    return Tensor(x.value * v.value, (x, v), vjp)


def add_row(x: Tensor, b: Tensor) -> Tensor:
    """Broadcast-add a 1 x d bias row."""
    x, b = _as_tensor(x), _as_tensor(b)
    if b.value.shape != (1, x.value.shape[1]):
        raise ValueError(f"bias must be (1, {x.value.shape[1]}), got {b.value.shape}")
    return Tensor(x.value + b.value, (x, b), lambda g: (g, g.sum(axis=0, keepdims=True)))


def _segment_counts(groups: np.ndarray, n_groups: int) -> np.ndarray:
    return np.bincount(groups, minlength=n_groups)


def segment_reduce(x: Tensor, groups, n_groups: int, op: str = "sum") -> Tensor:
    """Reduce rows of x into n_groups rows by the given group ids.

    Empty groups reduce to a zero row for every op (mean and max are
    undefined on empty neighborhoods; the caller counts those separately).
    """
    x = _as_tensor(x)
    groups = np.asarray(groups, dtype=np.int64)
    d = x.value.shape[1]
    if op in ("sum", "mean"):
        out = np.zeros((n_groups, d))
        np.add.at(out, groups, x.value)
        if op == "sum":
            return Tensor(out, (x,), lambda g: (g[groups],))
        counts = _segment_counts(groups, n_groups).astype(np.float64)
        safe = np.maximum(counts, 1.0)[:, None]
        out = out / safe

        def vjp_mean(g):
            return ((g / safe)[groups],)

        return Tensor(out, (x,), vjp_mean)
    if op == "max":
        out = np.full((n_groups, d), -np.inf)
        np.maximum.at(out, groups, x.value)
        counts = _segment_counts(groups, n_groups)
        out[counts == 0] = 0.0
        # first row attaining the max in each (group, column) gets the gradient
        winner = np.full((n_groups, d), np.iinfo(np.int64).max, dtype=np.int64)
        rows = np.arange(x.value.shape[0], dtype=np.int64)
        hit = x.value == out[groups]
        for c in range(d):
            cand = np.where(hit[:, c], rows, np.iinfo(np.int64).max)
            np.minimum.at(winner[:, c], groups, cand)

        def vjp_max(g):
            dx = np.zeros_like(x.value)
            for c in range(d):
                w = winner[:, c]
                ok = w != np.iinfo(np.int64).max
                dx[w[ok], c] += g[ok, c]
            return (dx,)

        return Tensor(out, (x,), vjp_max)
    raise ValueError(f"unknown segment reduction: {op!r}")


def segment_softmax(scores: Tensor, groups, n_groups: int) -> Tensor:
    """Softmax of an (n, 1) score column within each group."""
    s = _as_tensor(scores)
    groups = np.asarray(groups, dtype=np.int64)
    col = s.value[:, 0]
    gmax = np.full(n_groups, -np.inf)
    np.maximum.at(gmax, groups, col)
    gmax[np.isneginf(gmax)] = 0.0
    e = np.exp(col - gmax[groups])
    denom = np.zeros(n_groups)
    np.add.at(denom, groups, e)
    y = (e / denom[groups])[:, None]

    def vjp(g):
        gy = (g * y)[:, 0]
        dot = np.zeros(n_groups)
        np.add.at(dot, groups, gy)
        return ((gy - y[:, 0] * dot[groups])[:, None],)

    return Tensor(y, (s,), vjp)


def sum_all(x: Tensor) -> Tensor:
    x = _as_tensor(x)
    return Tensor(x.value.sum(), (x,), lambda g: (np.full_like(x.value, float(g)),))


def mse(pred: Tensor, target) -> Tensor:
    pred = _as_tensor(pred)
    t = np.asarray(target, dtype=np.float64)
    if t.shape != pred.value.shape:
        raise ValueError(f"mse shape mismatch: {pred.value.shape} vs {t.shape}")
    diff = pred.value - t
    n = max(diff.size, 1)
    return Tensor((diff * diff).sum() / n, (pred,), lambda g: (g * 2.0 * diff / n,))


def cross_entropy_logits(logits: Tensor, labels) -> Tensor:
    """Mean softmax cross-entropy of (n, C) logits against int labels."""
    logits = _as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    z = logits.value - logits.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)
    n = logits.value.shape[0]
    nll = -(z[np.arange(n), labels] - np.log(e.sum(axis=1)))

    def vjp(g):
        d = p.copy()
        d[np.arange(n), labels] -= 1.0
        return (g * d / n,)

    return Tensor(nll.mean(), (logits,), vjp)


# ---------------------------------------------------------------------------
# optimizers and gradient checking


def sgd_step(params: Iterable[Parameter], lr: float):
    for p in params:
        p.value = p.value - lr * p.grad


class Adam:
    """Adam with bias correction; state keyed by parameter name."""

    def __init__(self, params: Sequence[Parameter], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self._m = {p.name: np.zeros_like(p.value) for p in self.params}
        self._v = {p.name: np.zeros_like(p.value) for p in self.params}

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p in self.params:
            m = self._m[p.name] = b1 * self._m[p.name] + (1 - b1) * p.grad
            v = self._v[p.name] = b2 * self._v[p.name] + (1 - b2) * p.grad * p.grad
            mhat = m / (1 - b1 ** self.t)
            vhat = v / (1 - b2 ** self.t)
            p.value = p.value - self.lr * mhat / (np.sqrt(vhat) + self.eps)


def adam_step(state: Adam):
    state.step()


def grad_check(
    f: Callable[[], Tensor],
    params: Sequence[Parameter],
    h: float = 1e-5,
    sample_above: int = 10_000,
    sample_frac: float = 0.05,
    seed: int = 0,
) -> float:
    """Max relative error between reverse-mode and central-difference
    gradients of the scalar function f over every parameter entry (a 5%
    sample above `sample_above` entries).

    Deliberately evaluates f away from non-smooth points: callers should
    nudge inputs off relu kinks (|preactivation| >~ h) before checking.
    """
    zero_grads(params)
    with Tape() as tape:
        loss = f()
    backward(tape, loss)
    analytic = {p.name: p.grad.copy() for p in params}

    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in params:
        flat = p.value.reshape(-1)
        n = flat.size
        if n > sample_above:
            idxs = rng.choice(n, size=max(1, int(n * sample_frac)), replace=False)
        else:
            idxs = range(n)
        ga = analytic[p.name].reshape(-1)
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + h
            up = float(f().value)
            flat[i] = orig - h
            dn = float(f().value)
            flat[i] = orig
            num = (up - dn) / (2 * h)
            err = abs(ga[i] - num) / max(1e-8, abs(ga[i]) + abs(num))
            worst = max(worst, err)
    return worst
