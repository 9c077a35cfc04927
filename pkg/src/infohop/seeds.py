"""Derivation of independent, named random streams from one experiment seed.

Every stochastic ingredient of an experiment (pattern draw, weight init,
corruption noise, bootstrap resampling, ...) pulls from its own substream,
keyed by the experiment seed plus a name and optional integer indices.
Streams are independent of each other and of the order in which worker
processes consume them, which is what makes ``--jobs`` irrelevant to the
numeric output.
"""

from __future__ import annotations

import zlib

import numpy as np


def _as_key(tag: int | str) -> int:
    if isinstance(tag, str):
        return zlib.crc32(tag.encode("utf-8"))
    return int(tag)


def stream(seed: int, *tags: int | str) -> np.random.Generator:
    """Generator for the substream named by ``tags`` under ``seed``.

    Same (seed, tags) always yields the same stream; different tags yield
    statistically independent streams.
    """
    keys = [_as_key(t) for t in tags]
    return np.random.default_rng(np.random.SeedSequence([int(seed), *keys]))
