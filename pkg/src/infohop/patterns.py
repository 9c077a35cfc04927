"""Bipolar pattern sets: generation, corruption, comparison, file I/O.

A pattern set is a plain float64 array of shape (m, N) with entries in
{-1.0, +1.0}; one row per stored memory.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, ParameterError


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def check_patterns(patterns: np.ndarray) -> np.ndarray:
    """Validate an (m, N) bipolar matrix and return it as float64."""
    arr = np.asarray(patterns, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"pattern set must be 2-D, got shape {arr.shape}")
    m, n = arr.shape
    if m < 1 or n < 2:
        raise DimensionError(f"need m >= 1 and N >= 2, got m={m}, N={n}")
    if not np.all(np.abs(arr) == 1.0):
        raise ParameterError("pattern entries must be exactly -1 or +1")
    return arr


def memory_load(patterns: np.ndarray) -> float:
    """Number of patterns per neuron, m/N."""
    m, n = np.asarray(patterns).shape
    return m / n


def gen_iid_patterns(m: int, N: int, seed) -> np.ndarray:
    """m independent fair bipolar patterns of length N."""
    if m < 1 or N < 2:
        raise DimensionError(f"need m >= 1 and N >= 2, got m={m}, N={N}")
    rng = _rng(seed)
    return rng.integers(0, 2, size=(m, N)).astype(np.float64) * 2.0 - 1.0


def gen_correlated_patterns(m: int, N: int, persistence: float, seed) -> np.ndarray:
    """Spatially correlated patterns built element by element.

    The first element of each pattern is a fair coin; every following element
    repeats its left neighbour with probability ``persistence`` and flips
    otherwise, so higher persistence gives larger same-sign blocks while the
    overall +1/-1 balance stays fair.
    """
    if m < 1 or N < 2:
        raise DimensionError(f"need m >= 1 and N >= 2, got m={m}, N={N}")
    if not 0.0 <= persistence <= 1.0:
        raise ParameterError(f"persistence must be in [0, 1], got {persistence}")
    rng = _rng(seed)
    first = rng.integers(0, 2, size=(m, 1)).astype(np.float64) * 2.0 - 1.0
    steps = np.where(rng.random(size=(m, N - 1)) < persistence, 1.0, -1.0)
    return np.concatenate([first, first * np.cumprod(steps, axis=1)], axis=1)


def corrupt(pattern: np.ndarray, flip_fraction: float, seed) -> np.ndarray:
    """Sign-flip exactly round(f*N) distinct positions, chosen uniformly.

    A fixed flip count (rather than i.i.d. per-bit flips) keeps the noise
    dose per trial deterministic.
    """
    if not 0.0 <= flip_fraction <= 1.0:
        raise ParameterError(f"flip fraction must be in [0, 1], got {flip_fraction}")
    vec = np.asarray(pattern, dtype=np.float64)
    if vec.ndim != 1:
        raise DimensionError(f"pattern must be 1-D, got shape {vec.shape}")
    n = vec.size
    k = int(np.floor(flip_fraction * n + 0.5))
    out = vec.copy()
    if k:
        idx = _rng(seed).choice(n, size=k, replace=False)
        out[idx] = -out[idx]
    return out


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b)/N for bipolar vectors of equal length N."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"vectors must be 1-D and equal length, got {a.shape} and {b.shape}")
    return float(np.dot(a, b) / a.size)


def save_patterns(path, patterns: np.ndarray) -> None:
    """Write one pattern per line, entries as '-1'/'1' separated by spaces."""
    arr = check_patterns(patterns)
    with open(path, "w", encoding="utf-8") as fh:
        for row in arr:
            fh.write(" ".join("1" if v > 0 else "-1" for v in row))
            fh.write("\n")


def load_patterns(path) -> np.ndarray:
    """Read the pattern text format; rejects any token other than -1 or 1."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            for tok in tokens:
                if tok not in ("-1", "1"):
                    raise ParameterError(f"{path}:{lineno}: invalid token {tok!r}")
            rows.append([float(tok) for tok in tokens])
    if not rows:
        raise DimensionError(f"{path}: no patterns found")
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise DimensionError(f"{path}: rows have unequal lengths {sorted(lengths)}")
    return check_patterns(np.asarray(rows))
