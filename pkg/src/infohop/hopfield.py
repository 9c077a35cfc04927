"""Classical Hopfield machinery: sign dynamics, recall, Hebbian training.

Weights are dense (N, N) float64 matrices with a zero diagonal; each row i
holds the incoming weights of neuron i. Updates are synchronous: every
neuron switches to the sign of its drive at once, with sgn(0) := +1 so the
dynamics are deterministic.
"""

from __future__ import annotations

import struct
from typing import Literal, NamedTuple

import numpy as np

from .errors import DimensionError, ParameterError
from .patterns import check_patterns

Termination = Literal["fixed_point", "limit_cycle", "max_iterations"]

WEIGHTS_MAGIC = b"AMW1"


class RecallResult(NamedTuple):
    final_state: np.ndarray
    steps: int
    termination: Termination


def check_weights(w: np.ndarray) -> np.ndarray:
    arr = np.asarray(w, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"weight matrix must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("weight matrix contains non-finite entries")
    if np.any(np.diagonal(arr) != 0.0):
        raise ParameterError("weight matrix diagonal must be exactly zero")
    return arr


def hebbian_train(patterns: np.ndarray) -> np.ndarray:
    """Outer-product weights w_ij = sum_p xi_i xi_j with zero diagonal."""
    pats = check_patterns(patterns)
    w = pats.T @ pats
    np.fill_diagonal(w, 0.0)
    return w


def recurrent_drive(w: np.ndarray, state: np.ndarray) -> np.ndarray:
    """Weighted input per neuron, r_i = sum_j w_ij y_j."""
    w = np.asarray(w, dtype=np.float64)
    state = np.asarray(state, dtype=np.float64)
    if w.ndim != 2 or state.ndim != 1 or w.shape[1] != state.size:
        raise DimensionError(f"incompatible shapes {w.shape} and {state.shape}")
    return w @ state


def step_sync(w: np.ndarray, state: np.ndarray) -> np.ndarray:
    """One synchronous update y <- sgn(W y), with sgn(0) := +1."""
    drive = recurrent_drive(w, state)
    return np.where(drive >= 0.0, 1.0, -1.0)


def recall(w: np.ndarray, init: np.ndarray, max_iter: int = 100) -> RecallResult:
    """Iterate step_sync until a fixed point, a 2-cycle, or max_iter steps.

    Synchronous dynamics with symmetric weights admit only period <= 2
    cycles, so a two-state history suffices; longer cycles (possible for
    asymmetric weights) fall through to max_iterations.
    """
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
    prev = None
    cur = np.asarray(init, dtype=np.float64)
    for step in range(1, max_iter + 1):
        nxt = step_sync(w, cur)
        if np.array_equal(nxt, cur):
            return RecallResult(nxt, step, "fixed_point")
        if prev is not None and np.array_equal(nxt, prev):
            return RecallResult(nxt, step, "limit_cycle")
        prev, cur = cur, nxt
    return RecallResult(cur, max_iter, "max_iterations")


def recall_batch(w: np.ndarray, inits: np.ndarray, max_iter: int = 100) -> np.ndarray:
    """Row-wise recall for a batch of initial states; equals recall() per row.

    Rows freeze as soon as their termination condition fires, so the result
    is bit-identical to running recall() on each row separately.
    """
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
    w = np.asarray(w, dtype=np.float64)
    states = np.asarray(inits, dtype=np.float64).copy()
    if states.ndim != 2 or states.shape[1] != w.shape[0]:
        raise DimensionError(f"incompatible shapes {w.shape} and {states.shape}")
    prev = None
    active = np.ones(states.shape[0], dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        drive = states[active] @ w.T
        nxt = np.where(drive >= 0.0, 1.0, -1.0)
        cur_active = states[active]
        done = np.all(nxt == cur_active, axis=1)
        if prev is not None:
            done |= np.all(nxt == prev[active], axis=1)
        new_prev = states.copy()
        states[active] = nxt
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        prev = new_prev
    return states


def save_weights(path, w: np.ndarray) -> None:
    """Binary format: magic 'AMW1', N as u64 little-endian, row-major f64."""
    arr = check_weights(w)
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<Q", arr.shape[0]))
        fh.write(arr.astype("<f8").tobytes(order="C"))


def load_weights(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != WEIGHTS_MAGIC:
            raise ParameterError(f"{path}: bad magic {magic!r}, expected {WEIGHTS_MAGIC!r}")
        (n,) = struct.unpack("<Q", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n * n:
        raise DimensionError(f"{path}: expected {n * n} weights, found {data.size}")
    return check_weights(data.reshape(n, n).astype(np.float64))


def save_weights_text(path, w: np.ndarray) -> None:
    """Lossless text export: one row per line, %.17g per entry."""
    arr = check_weights(w)
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write(" ".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def load_weights_text(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append([float(tok) for tok in line.split()])
    return check_weights(np.asarray(rows, dtype=np.float64))
