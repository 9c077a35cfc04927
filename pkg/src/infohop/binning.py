"""Differentiable 2-D histograms over (recurrent, target) input samples.

Bin membership is soft: each sample spreads over bins with a product of
per-axis sigmoid kernels evaluated at the distance to the bin center, then
gets normalized to unit total weight so every sample counts equally. As
the kernel width shrinks the histogram converges to hard binning.

The grid is refit from the samples every time (the weights, and with them
the input range, grow during training). Everything here accepts plain
arrays or tape variables; sample axes may carry leading batch dimensions
(one histogram per neuron).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import shape_of
from .errors import DimensionError, ParameterError

# Floor for the data span on an axis where all samples coincide.
MIN_SPAN = 1e-6


@dataclass(frozen=True)
class BinningConfig:
    n_r: int = 60
    n_t: int = 2
    sigma_r: float = 0.5
    sigma_t: float = 1e-6
    padding: float = 1.0
    # Unit the width fractions multiply: "diagonal" scales both kernels by
    # the half-diagonal of a bin, "axis" by that axis's own bin side. The
    # diagonal unit couples the recurrent kernel width to the (much wider)
    # target bins, which is what gives the gradients enough reach for
    # goal-trained networks to escape near-zero drive clusters.
    width_scale: str = "diagonal"

    def __post_init__(self):
        if self.n_r < 1 or self.n_t < 1:
            raise ParameterError(f"bin counts must be >= 1, got n_r={self.n_r}, n_t={self.n_t}")
        if self.sigma_r <= 0.0 or self.sigma_t <= 0.0:
            raise ParameterError(
                f"kernel width fractions must be > 0, got sigma_r={self.sigma_r}, sigma_t={self.sigma_t}")
        if self.width_scale not in ("axis", "diagonal"):
            raise ParameterError(f"width_scale must be 'axis' or 'diagonal', got {self.width_scale!r}")


@dataclass
class BinGrid:
    """Axis ranges and bin side lengths; entries are scalars, batched arrays
    or tape variables, depending on what fit_grid was given."""

    r_lo: object
    r_hi: object
    c_r: object
    t_lo: object
    t_hi: object
    c_t: object


def _axis_range(samples, n: int, padding: float):
    """lo/hi/side-length for one axis, padded by `padding` raw bin widths."""
    lo_raw = ad.amin(samples, axis=-1)
    hi_raw = ad.amax(samples, axis=-1)
    span = ad.maximum(ad.sub(hi_raw, lo_raw), MIN_SPAN)
    c_raw = ad.div(span, float(n))
    lo = ad.sub(lo_raw, ad.mul(padding, c_raw))
    hi = ad.add(hi_raw, ad.mul(padding, c_raw))
    c = ad.div(ad.sub(hi, lo), float(n))
    return lo, hi, c


def fit_grid(samples_r, samples_t, config: BinningConfig) -> BinGrid:
    """Fit both axis ranges to the given samples (last axis = samples)."""
    rs, ts = shape_of(samples_r), shape_of(samples_t)
    if len(rs) < 1 or rs[-1] < 1:
        raise DimensionError("need at least one sample to fit a grid")
    if rs != ts:
        raise DimensionError(f"r and t samples must align, got {rs} and {ts}")
    r_lo, r_hi, c_r = _axis_range(samples_r, config.n_r, config.padding)
    t_lo, t_hi, c_t = _axis_range(samples_t, config.n_t, config.padding)
    return BinGrid(r_lo, r_hi, c_r, t_lo, t_hi, c_t)


def kernel_widths(grid: BinGrid, config: BinningConfig):
    """Per-axis kernel widths (ell_r, ell_t) under the configured scaling."""
    if config.width_scale == "axis":
        return ad.mul(config.sigma_r, grid.c_r), ad.mul(config.sigma_t, grid.c_t)
    half_r = ad.div(grid.c_r, 2.0)
    half_t = ad.div(grid.c_t, 2.0)
    diag = ad.sqrt(ad.add(ad.mul(half_r, half_r), ad.mul(half_t, half_t)))
    return ad.mul(config.sigma_r, diag), ad.mul(config.sigma_t, diag)


def axis_weights(samples, lo, c, n: int, ell):
    """Per-sample soft bin weights on one axis, normalized over the bins.

    Returns shape (..., m, n). The kernel argument is (c/2 - d)/ell with d
    the distance from the sample to the bin center, so a sample on a bin
    edge scores exactly 1/2 on the two adjacent bins.
    """
    offsets = (np.arange(n, dtype=np.float64) + 0.5)
    centers = ad.add(ad.expand_last(lo), ad.mul(offsets, ad.expand_last(c)))   # (..., n)
    d = ad.absolute(ad.sub(ad.expand_last(samples), ad.expand_at(centers, -2)))  # (..., m, n)
    half_width = ad.expand_last(ad.div(c, 2.0), 2)
    k = ad.sigmoid(ad.div(ad.sub(half_width, d), ad.expand_last(ell, 2)))
    total = ad.asum(k, axis=-1, keepdims=True)
    return ad.div(k, total)


def soft_weights(r, t, grid: BinGrid, config: BinningConfig):
    """Normalized (n_r, n_t) weight matrix of a single sample."""
    ell_r, ell_t = kernel_widths(grid, config)
    wr = axis_weights(ad.reshape(r, (1,)), grid.r_lo, grid.c_r, config.n_r, ell_r)
    wt = axis_weights(ad.reshape(t, (1,)), grid.t_lo, grid.c_t, config.n_t, ell_t)
    return ad.matmul(ad.swap_last2(wr), wt)


def soft_histogram(samples_r, samples_t, grid: BinGrid, config: BinningConfig):
    """Mean of the per-sample weight matrices: p(r_bin, t_bin), shape (..., n_r, n_t).

    The per-sample weight matrix is a product of the two per-axis kernels,
    so its normalization factorizes and the mean reduces to one matmul.
    """
    rs, ts = shape_of(samples_r), shape_of(samples_t)
    if rs != ts or len(rs) < 1 or rs[-1] < 1:
        raise DimensionError(f"need aligned, nonempty sample vectors, got {rs} and {ts}")
    m = rs[-1]
    ell_r, ell_t = kernel_widths(grid, config)
    wr = axis_weights(samples_r, grid.r_lo, grid.c_r, config.n_r, ell_r)
    wt = axis_weights(samples_t, grid.t_lo, grid.c_t, config.n_t, ell_t)
    return ad.div(ad.matmul(ad.swap_last2(wr), wt), float(m))
