"""Reverse-mode differentiation for the fixed dual-autoencoder compute graph.

A small tape: each op returns a Tensor holding its inputs and a closure that
maps the upstream gradient to gradients of the inputs. Everything is float64.
Not a general autodiff system; only the ops this model needs exist.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .graph import CSRMatrix


class TapeError(RuntimeError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_bwd")

    def __init__(self, data, requires_grad=False, _parents=(), _bwd=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._bwd = _bwd

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def backward(self) -> None:
        """Backpropagate from a scalar; leaf .grad buffers are overwritten."""
        if self.data.size != 1:
            raise TapeError("backward requires a scalar loss")
        if not np.isfinite(self.data):
            raise TapeError("non-finite loss")
        order = _toposort(self)
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for t in order:  # order is already reverse-topological
            g = grads.pop(id(t), None)
            if g is None:
                continue
            if t._bwd is None:
                if t.requires_grad:
                    t.grad = g
                continue
            for p, pg in zip(t._parents, t._bwd(g)):
                if pg is None:
                    continue
                acc = grads.get(id(p))
                grads[id(p)] = pg if acc is None else acc + pg


def _toposort(root: Tensor) -> list[Tensor]:
    seen: set[int] = set()
    out: list[Tensor] = []
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        t, done = stack.pop()
        if done:
            out.append(t)
            continue
        if id(t) in seen:
            continue
        seen.add(id(t))
        stack.append((t, True))
        for p in t._parents:
            stack.append((p, False))
    out.reverse()
    return out


def constant(x) -> Tensor:
    return Tensor(x)


# ---------------------------------------------------------------- activations

class ActivationKind(Enum):
    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"

    def apply_array(self, x: np.ndarray) -> np.ndarray:
        if self is ActivationKind.RELU:
            return np.maximum(x, 0.0)
        if self is ActivationKind.TANH:
            return np.tanh(x)
        if self is ActivationKind.SIGMOID:
            return 1.0 / (1.0 + np.exp(-x))
        return x

    def derivative_array(self, x: np.ndarray) -> np.ndarray:
        # Subgradient of ReLU at 0 is 0 by convention.
        if self is ActivationKind.RELU:
            return (x > 0).astype(np.float64)
        if self is ActivationKind.TANH:
            y = np.tanh(x)
            return 1.0 - y * y
        if self is ActivationKind.SIGMOID:
            y = 1.0 / (1.0 + np.exp(-x))
            return y * (1.0 - y)
        return np.ones_like(x)


def activate(x: Tensor, kind: ActivationKind) -> Tensor:
    if kind is ActivationKind.IDENTITY:
        return x
    xd = x.data
    return Tensor(kind.apply_array(xd), _parents=(x,),
                  _bwd=lambda g: (g * kind.derivative_array(xd),))


# ------------------------------------------------------------------ basic ops

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape[1] != b.data.shape[0]:
        raise TapeError(f"matmul shape mismatch {a.shape} x {b.shape}")
    ad, bd = a.data, b.data
    return Tensor(ad @ bd, _parents=(a, b),
                  _bwd=lambda g: (g @ bd.T, ad.T @ g))


def spmm(s: CSRMatrix, d: Tensor) -> Tensor:
    """Sparse-dense product; the sparse operand is a constant."""
    if s.shape[1] != d.data.shape[0]:
        raise TapeError(f"spmm shape mismatch {s.shape} x {d.shape}")
    m = s.to_scipy()
    return Tensor(m @ d.data, _parents=(d,),
                  _bwd=lambda g: (m.T @ g,))


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise TapeError(f"add shape mismatch {a.shape} vs {b.shape}")
    return Tensor(a.data + b.data, _parents=(a, b), _bwd=lambda g: (g, g))


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    if b.data.shape != (x.data.shape[1],):
        raise TapeError(f"bias length {b.shape} != width {x.shape[1]}")
    return Tensor(x.data + b.data, _parents=(x, b),
                  _bwd=lambda g: (g, g.sum(axis=0)))


def dense_affine(x: Tensor, w: Tensor, b: Tensor | None,
                 act: ActivationKind) -> Tensor:
    """act(x @ w + b); b optional."""
    y = matmul(x, w)
    if b is not None:
        y = add_bias(y, b)
    return activate(y, act)


def gram(z: Tensor) -> Tensor:
    """z @ z.T (symmetric by construction)."""
    zd = z.data
    return Tensor(zd @ zd.T, _parents=(z,),
                  _bwd=lambda g: ((g + g.T) @ zd,))


def pair_dots(z: Tensor, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    """Vector of <z[rows[k]], z[cols[k]]> for sampled adjacency entries."""
    zd = z.data
    out = np.einsum("ij,ij->i", zd[rows], zd[cols])

    def bwd(g):
        dz = np.zeros_like(zd)
        np.add.at(dz, rows, g[:, None] * zd[cols])
        np.add.at(dz, cols, g[:, None] * zd[rows])
        return (dz,)

    return Tensor(out, _parents=(z,), _bwd=bwd)


def sigmoid(x: Tensor) -> Tensor:
    return activate(x, ActivationKind.SIGMOID)


def mse(pred: Tensor, target: np.ndarray) -> Tensor:
    """Mean squared error over all entries; target is a constant."""
    t = np.asarray(target, dtype=np.float64)
    if pred.data.shape != t.shape:
        raise TapeError(f"mse shape mismatch {pred.shape} vs {t.shape}")
    diff = pred.data - t
    n = diff.size
    return Tensor(np.mean(diff * diff), _parents=(pred,),
                  _bwd=lambda g: (g * 2.0 * diff / n,))


def row_select(x: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx, dtype=np.int64)
    xd = x.data

    def bwd(g):
        dx = np.zeros_like(xd)
        np.add.at(dx, idx, g)
        return (dx,)

    return Tensor(xd[idx], _parents=(x,), _bwd=bwd)


def hinge_sphere(z: Tensor, center: np.ndarray, radius: float, mu: float) -> Tensor:
    """r^2 + (1/(mu N)) sum_i max(0, ||z_i - c||^2 - r^2).

    Differentiable w.r.t. the embeddings only; center and radius are constants
    (the radius is refit by quantile outside the gradient step).
    """
    if not (0.0 < mu <= 1.0):
        raise TapeError(f"mu must lie in (0, 1], got {mu}")
    c = np.asarray(center, dtype=np.float64)
    zd = z.data
    n = zd.shape[0]
    diff = zd - c
    sqd = np.einsum("ij,ij->i", diff, diff)
    viol = sqd - radius * radius
    active = viol > 0
    loss = radius * radius + np.sum(np.maximum(viol, 0.0)) / (mu * n)

    def bwd(g):
        return (g * (2.0 / (mu * n)) * diff * active[:, None],)

    return Tensor(loss, _parents=(z,), _bwd=bwd)


def weighted_sum(terms: list[tuple[float, Tensor]]) -> Tensor:
    """Scalar combination sum_k w_k * t_k."""
    tensors = tuple(t for _, t in terms)
    weights = [w for w, _ in terms]
    val = sum(w * t.data for w, t in terms)
    return Tensor(val, _parents=tensors,
                  _bwd=lambda g: tuple(g * w for w in weights))


# ------------------------------------------------------------ parameter store

class ParameterStore:
    """Named trainable tensors with Adam state; owned by the training loop."""

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"duplicate parameter {name}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True)
        self._params[name] = t
        self._m[name] = np.zeros_like(t.data)
        self._v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self._params.items()}

    def clear_grads(self) -> None:
        for t in self._params.values():
            t.grad = None


def adam_step(store: ParameterStore, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One Adam update with bias correction over all parameters with grads."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    store.step += 1
    t = store.step
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, p in store.items():
        g = p.grad
        if g is None:
            continue
        m = store._m[name]
        v = store._v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def grad_check(loss_fn, store: ParameterStore, h: float = 1e-5,
               names: list[str] | None = None) -> float:
    """Max relative error between analytic and central-difference gradients.

    loss_fn() must rebuild the loss from the store's current parameter values.
    """
    loss = loss_fn()
    if not np.isfinite(loss.data):
        raise TapeError("non-finite loss in grad_check")
    store.clear_grads()
    loss.backward()
    analytic = {k: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
                for k, t in store.items()}
    worst = 0.0
    for name in (names or store.names()):
        p = store[name]
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = float(loss_fn().data)
            flat[i] = orig - h
            f_minus = float(loss_fn().data)
            flat[i] = orig
            central = (f_plus - f_minus) / (2.0 * h)
            a = analytic[name].reshape(-1)[i]
            err = abs(a - central) / max(1e-8, abs(a) + abs(central))
            worst = max(worst, err)
    return worst


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))
