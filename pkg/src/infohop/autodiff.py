"""Reverse-mode automatic differentiation on numpy arrays, plus Adam.

A tape is built implicitly by wrapping an input in :class:`Var` and
evaluating ordinary expressions. Every helper in this module also accepts
plain ndarrays or scalars, in which case it simply computes the value, so
generic numeric code (soft binning, information measures, goals) is written
once and runs identically with or without gradient tracking.

Shapes follow numpy broadcasting; the backward pass sums adjoints over the
broadcast axes. Summation order is fixed, so gradients are bit-reproducible
across runs and worker counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .errors import DimensionError, NumericDomainError, ParameterError

_LN2 = float(np.log(2.0))


class Var:
    """Node of the computation tape: a value and its accumulated adjoint."""

    __slots__ = ("value", "grad", "_parents", "_backward")

    def __init__(self, value, _parents=(), _backward=None):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = None
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        return f"Var(value={self.value!r})"

    def backward(self) -> None:
        """Accumulate d(self)/d(node) into .grad for every node on the tape.

        self must hold a single scalar. Grads of reachable nodes are reset
        first, so repeated calls do not accumulate across passes.
        """
        if self.value.size != 1:
            raise DimensionError(f"backward() needs a scalar output, got shape {self.shape}")
        order: list[Var] = []
        seen: set[int] = set()
        stack: list[tuple[Var, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        for node in order:
            node.grad = None
        self.grad = np.ones_like(self.value)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Operators delegate to the module-level primitives.
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)


def value_of(x) -> np.ndarray:
    """The plain numpy value of x, whether or not it is on a tape."""
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


def shape_of(x) -> tuple:
    return value_of(x).shape


def _any_var(*xs) -> bool:
    return any(isinstance(x, Var) for x in xs)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum an adjoint over the axes numpy broadcasting introduced."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _accum(x, g: np.ndarray) -> None:
    # Rebind instead of adding in place: adjoints may alias each other
    # through view-returning ops, and rebinding never mutates a buffer.
    if isinstance(x, Var):
        ub = _unbroadcast(g, x.value.shape)
        x.grad = ub if x.grad is None else x.grad + ub


def _parents(*xs) -> tuple:
    return tuple(x for x in xs if isinstance(x, Var))


# ---------------------------------------------------------------------------
# Elementwise primitives
# ---------------------------------------------------------------------------

def add(a, b):
    if not _any_var(a, b):
        return np.add(a, b)
    av, bv = value_of(a), value_of(b)
    out = av + bv

    def bwd(g):
        _accum(a, g)
        _accum(b, g)

    return Var(out, _parents(a, b), bwd)


def sub(a, b):
    if not _any_var(a, b):
        return np.subtract(a, b)
    av, bv = value_of(a), value_of(b)
    out = av - bv

    def bwd(g):
        _accum(a, g)
        _accum(b, -g)

    return Var(out, _parents(a, b), bwd)


def mul(a, b):
    if not _any_var(a, b):
        return np.multiply(a, b)
    av, bv = value_of(a), value_of(b)
    out = av * bv

    def bwd(g):
        _accum(a, g * bv)
        _accum(b, g * av)

    return Var(out, _parents(a, b), bwd)


def div(a, b):
    if not _any_var(a, b):
        return np.divide(a, b)
    av, bv = value_of(a), value_of(b)
    out = av / bv

    def bwd(g):
        _accum(a, g / bv)
        _accum(b, -g * av / (bv * bv))

    return Var(out, _parents(a, b), bwd)


def neg(a):
    if not _any_var(a):
        return np.negative(a)
    out = -a.value

    def bwd(g):
        _accum(a, -g)

    return Var(out, (a,), bwd)


def exp(a):
    if not _any_var(a):
        return np.exp(a)
    out = np.exp(a.value)

    def bwd(g):
        _accum(a, g * out)

    return Var(out, (a,), bwd)


def log2(a):
    av = value_of(a)
    if np.any(av <= 0.0):
        bad = int(np.sum(av <= 0.0))
        raise NumericDomainError(f"log2 of nonpositive value ({bad} entr{'y' if bad == 1 else 'ies'})")
    if not _any_var(a):
        return np.log2(av)
    out = np.log2(av)

    def bwd(g):
        _accum(a, g / (av * _LN2))

    return Var(out, (a,), bwd)


def sigmoid(a):
    if not _any_var(a):
        return expit(a)
    out = expit(a.value)

    def bwd(g):
        _accum(a, g * out * (1.0 - out))

    return Var(out, (a,), bwd)


def sqrt(a):
    if not _any_var(a):
        return np.sqrt(a)
    out = np.sqrt(a.value)

    def bwd(g):
        _accum(a, g / (2.0 * out))

    return Var(out, (a,), bwd)


def absolute(a):
    if not _any_var(a):
        return np.abs(a)
    av = a.value
    out = np.abs(av)

    def bwd(g):
        _accum(a, g * np.sign(av))

    return Var(out, (a,), bwd)


def maximum(a, b):
    """Elementwise max; on ties the gradient goes to the first operand."""
    if not _any_var(a, b):
        return np.maximum(a, b)
    av, bv = value_of(a), value_of(b)
    out = np.maximum(av, bv)
    take_a = av >= bv

    def bwd(g):
        _accum(a, g * take_a)
        _accum(b, g * ~take_a)

    return Var(out, _parents(a, b), bwd)


def xlog2_ratio(w, num, den=1.0):
    """w * log2(num/den) with zero-mass cells contributing exactly zero.

    Cells with w <= 0 are excluded from both the value and all three
    gradients. A cell with positive mass but a nonpositive num or den means
    the caller's distribution is corrupted, and raises.
    """
    wv0, nv0, dv0 = value_of(w), value_of(num), value_of(den)
    wv, nv, dv = np.broadcast_arrays(wv0, nv0, dv0)
    mask = wv > 0.0
    if np.any(mask & ~((nv > 0.0) & (dv > 0.0))):
        raise NumericDomainError("positive probability mass over a nonpositive ratio (corrupted distribution)")
    safe_n = np.where(mask, nv, 1.0)
    safe_d = np.where(mask, dv, 1.0)
    log_ratio = np.log2(safe_n) - np.log2(safe_d)
    out = np.where(mask, wv * log_ratio, 0.0)
    if not _any_var(w, num, den):
        return out
    masked_w = np.where(mask, wv, 0.0)

    def bwd(g):
        if isinstance(w, Var):
            _accum(w, g * log_ratio)
        if isinstance(num, Var):
            _accum(num, g * masked_w / (safe_n * _LN2))
        if isinstance(den, Var):
            _accum(den, -g * masked_w / (safe_d * _LN2))

    return Var(out, _parents(w, num, den), bwd)


# ---------------------------------------------------------------------------
# Reductions and shape operations
# ---------------------------------------------------------------------------

def _norm_axis(axis, ndim) -> tuple:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def _restore_reduced(g: np.ndarray, src_shape: tuple, axis, keepdims: bool) -> np.ndarray:
    """Re-expand a reduced adjoint so it broadcasts against the source."""
    if not keepdims:
        for ax in _norm_axis(axis, len(src_shape)):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, src_shape)


def asum(a, axis=None, keepdims=False):
    if not _any_var(a):
        return np.sum(a, axis=axis, keepdims=keepdims)
    av = a.value
    out = np.sum(av, axis=axis, keepdims=keepdims)

    def bwd(g):
        _accum(a, _restore_reduced(g, av.shape, axis, keepdims))

    return Var(out, (a,), bwd)


def _extremum(a, axis, keepdims, np_fn):
    if not _any_var(a):
        return np_fn(a, axis=axis, keepdims=keepdims)
    av = a.value
    out = np_fn(av, axis=axis, keepdims=keepdims)
    hit = av == _restore_reduced(np.asarray(out), av.shape, axis, keepdims)
    ties = np.sum(hit, axis=axis, keepdims=True)

    def bwd(g):
        # Ties split the adjoint evenly: deterministic and order-free.
        _accum(a, _restore_reduced(g, av.shape, axis, keepdims) * hit / ties)

    return Var(out, (a,), bwd)


def amin(a, axis=None, keepdims=False):
    return _extremum(a, axis, keepdims, np.min)


def amax(a, axis=None, keepdims=False):
    return _extremum(a, axis, keepdims, np.max)


def reshape(a, shape):
    if not _any_var(a):
        return np.reshape(a, shape)
    av = a.value
    out = np.reshape(av, shape)

    def bwd(g):
        _accum(a, g.reshape(av.shape))

    return Var(out, (a,), bwd)


def expand_last(a, count: int = 1):
    """Append `count` singleton axes; the broadcast-friendly [..., None]."""
    return reshape(a, shape_of(a) + (1,) * count)


def expand_at(a, axis: int):
    """Insert one singleton axis at `axis` (negative counts from the end)."""
    shp = list(shape_of(a))
    pos = axis if axis >= 0 else len(shp) + 1 + axis
    shp.insert(pos, 1)
    return reshape(a, tuple(shp))


def swap_last2(a):
    if not _any_var(a):
        return np.swapaxes(a, -1, -2)
    out = np.swapaxes(a.value, -1, -2)

    def bwd(g):
        _accum(a, np.swapaxes(g, -1, -2))

    return Var(out, (a,), bwd)


def matmul(a, b):
    if not _any_var(a, b):
        return np.matmul(a, b)
    av, bv = value_of(a), value_of(b)
    # Promote 1-D operands to matrices so one gradient rule covers all cases.
    a2 = av[None, :] if av.ndim == 1 else av
    b2 = bv[:, None] if bv.ndim == 1 else bv
    out2 = np.matmul(a2, b2)
    out = out2
    if bv.ndim == 1:
        out = out[..., 0]
    if av.ndim == 1:
        out = out[..., 0, :] if out.ndim >= 2 else out[..., 0]

    def bwd(g):
        # Rebuild the adjoint to the promoted (..., p, q) matmul shape.
        g2 = np.asarray(g)
        if av.ndim == 1:
            g2 = g2[..., None] if bv.ndim == 1 else g2[..., None, :]
        if bv.ndim == 1:
            g2 = g2[..., None]
        if isinstance(a, Var):
            da = np.matmul(g2, np.swapaxes(b2, -1, -2))
            if av.ndim == 1:
                da = da[..., 0, :]
            _accum(a, da)
        if isinstance(b, Var):
            db = np.matmul(np.swapaxes(a2, -1, -2), g2)
            if bv.ndim == 1:
                db = db[..., 0]
            _accum(b, db)

    return Var(out, _parents(a, b), bwd)


def stack(items: Sequence, axis: int = 0):
    if not _any_var(*items):
        return np.stack(items, axis=axis)
    values = [value_of(x) for x in items]
    out = np.stack(values, axis=axis)

    def bwd(g):
        for i, x in enumerate(items):
            _accum(x, np.take(g, i, axis=axis))

    return Var(out, _parents(*items), bwd)


# ---------------------------------------------------------------------------
# Gradient extraction and validation
# ---------------------------------------------------------------------------

def gradients(output: Var, params: Sequence[Var]) -> list[np.ndarray]:
    """d(output)/d(p) for each p after one reverse sweep.

    Parameters that do not reach the output get a zero gradient.
    """
    for p in params:
        p.grad = None
    output.backward()
    return [p.grad if p.grad is not None else np.zeros_like(p.value) for p in params]


def finite_diff_check(objective: Callable, params: np.ndarray, h: float = 1e-6) -> float:
    """Max relative error between tape gradients and central differences.

    ``objective`` must accept either a Var (for the analytic gradient) or a
    plain ndarray (for the probe evaluations) and return a scalar.
    """
    base = np.asarray(params, dtype=np.float64)
    p = Var(base.copy())
    out = objective(p)
    if isinstance(out, Var):
        analytic = gradients(out, [p])[0]
    else:
        analytic = np.zeros_like(base)
    worst = 0.0
    flat = base.ravel()
    num = np.zeros_like(flat)
    for i in range(flat.size):
        probe = flat.copy()
        probe[i] += h
        f_plus = float(value_of(objective(probe.reshape(base.shape))))
        probe[i] -= 2.0 * h
        f_minus = float(value_of(objective(probe.reshape(base.shape))))
        num[i] = (f_plus - f_minus) / (2.0 * h)
    a = analytic.ravel()
    worst = float(np.max(np.abs(a - num) / (np.abs(a) + 1e-12)))
    return worst


# ---------------------------------------------------------------------------
# Adam (ascent direction)
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """Moment estimates for one parameter array.

    beta/epsilon defaults are the de facto constants of the optimizer; the
    step is applied in the ascent direction (params + step).
    """

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_shape(cls, shape, beta1: float = 0.9, beta2: float = 0.999,
                  epsilon: float = 1e-8) -> "AdamState":
        return cls(np.zeros(shape), np.zeros(shape), 0, beta1, beta2, epsilon)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState, eta: float) -> np.ndarray:
    """One Adam ascent step; returns updated params, mutates state."""
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.first_moment.shape:
        raise DimensionError(
            f"shape mismatch: params {params.shape}, grads {grads.shape}, "
            f"moments {state.first_moment.shape}")
    if eta <= 0.0:
        raise ParameterError(f"learning rate must be positive, got {eta}")
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    state.first_moment = b1 * state.first_moment + (1.0 - b1) * grads
    state.second_moment = b2 * state.second_moment + (1.0 - b2) * grads * grads
    m_hat = state.first_moment / (1.0 - b1 ** t)
    v_hat = state.second_moment / (1.0 - b2 ** t)
    return params + eta * m_hat / (np.sqrt(v_hat) + state.epsilon)
