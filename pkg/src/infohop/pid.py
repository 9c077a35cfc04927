"""Information decomposition of a neuron's output over its two inputs.

The joint distribution is an array ``p[..., y, r_bin, t_bin]`` with y in
{0, 1} encoding the outputs {-1, +1}; leading axes batch independent
distributions (typically one per neuron). Redundancy uses the
shared-exclusions measure: each realization is scored by how much the
union of its source events changes the output's odds. That measure is
differentiable and can go negative (see the XOR example in the tests).

All functions are written against the autodiff helpers, so they evaluate
identically on plain arrays and on tape variables; every weighted log term
treats zero-mass cells as exact zeros.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from . import autodiff as ad
from .autodiff import value_of
from .errors import DimensionError, NormalizationError, ParameterError

# The four antichains of the two-source redundancy lattice.
BOTH_SOURCES = (("r",), ("t",))  # union of the two singleton events
ONLY_R = (("r",),)
ONLY_T = (("t",),)
JOINT_SOURCES = (("r", "t"),)
ANTICHAINS = (BOTH_SOURCES, ONLY_R, ONLY_T, JOINT_SOURCES)


class GoalWeights(NamedTuple):
    """Coefficients of the linear training objective over the five atoms."""

    unq_r: float = 0.0
    unq_t: float = 0.0
    red: float = 0.0
    syn: float = 0.0
    res: float = 0.0


class PIDAtoms(NamedTuple):
    """The five-way split of the output entropy (all in bits)."""

    unq_r: object
    unq_t: object
    red: object
    syn: object
    res: object


def check_joint(joint) -> None:
    """Validate shape (..., 2, n_r, n_t), nonnegativity, and unit mass."""
    v = value_of(joint)
    if v.ndim < 3 or v.shape[-3] != 2:
        raise DimensionError(f"joint must have shape (..., 2, n_r, n_t), got {v.shape}")
    if np.any(v < 0.0):
        raise NormalizationError("joint distribution has negative mass")
    total = v.sum(axis=(-3, -2, -1))
    if np.any(np.abs(total - 1.0) > 1e-12):
        worst = float(np.max(np.abs(total - 1.0)))
        raise NormalizationError(f"joint mass deviates from 1 by {worst:.3e}")


def _canon(beta) -> frozenset:
    try:
        canon = frozenset(frozenset(s.lower() for s in part) for part in beta)
    except (TypeError, AttributeError) as exc:
        raise ParameterError(f"not an antichain over sources r, t: {beta!r}") from exc
    allowed = {frozenset(frozenset(p) for p in a) for a in ANTICHAINS}
    if canon not in allowed:
        raise ParameterError(f"not an antichain of the two-source lattice: {beta!r}")
    return canon


def _source_axes(sources) -> frozenset:
    if isinstance(sources, str):
        parts = frozenset(sources.lower())
    else:
        parts = frozenset(str(s).lower() for s in sources)
    if not parts or not parts <= {"r", "t"}:
        raise ParameterError(f"sources must be a nonempty subset of {{R, T}}, got {sources!r}")
    return parts


def entropy(marginal):
    """Shannon entropy in bits of a normalized vector (last axis)."""
    v = value_of(marginal)
    if np.any(v < 0.0):
        raise NormalizationError("probabilities must be nonnegative")
    if np.any(np.abs(v.sum(axis=-1) - 1.0) > 1e-9):
        raise NormalizationError("probability vector does not sum to 1")
    return ad.neg(ad.asum(ad.xlog2_ratio(marginal, marginal), axis=-1))


def _entropy_last(p):
    return ad.neg(ad.asum(ad.xlog2_ratio(p, p), axis=-1))


def _marginals(joint) -> dict:
    p_y = ad.asum(joint, axis=(-2, -1))          # (..., 2)
    p_yr = ad.asum(joint, axis=-1)               # (..., 2, n_r)
    p_yt = ad.asum(joint, axis=-2)               # (..., 2, n_t)
    p_rt = ad.asum(joint, axis=-3)               # (..., n_r, n_t)
    p_r = ad.asum(p_rt, axis=-1)                 # (..., n_r)
    p_t = ad.asum(p_rt, axis=-2)                 # (..., n_t)
    return {"y": p_y, "yr": p_yr, "yt": p_yt, "rt": p_rt, "r": p_r, "t": p_t}


def _isx(joint, canon: frozenset, mg: dict):
    """Weighted log-odds update of Y given the union of the source events."""
    r_only = frozenset({frozenset("r")})
    t_only = frozenset({frozenset("t")})
    both = frozenset({frozenset("r"), frozenset("t")})
    p_y = ad.expand_last(mg["y"], 2)                              # (..., 2, 1, 1)
    if canon == r_only:
        p_y_event = ad.expand_last(mg["yr"])                      # (..., 2, n_r, 1)
        p_event = ad.expand_at(ad.expand_last(mg["r"]), -3)       # (..., 1, n_r, 1)
    elif canon == t_only:
        p_y_event = ad.expand_at(mg["yt"], -2)                    # (..., 2, 1, n_t)
        p_event = ad.expand_at(ad.expand_at(mg["t"], -2), -3)     # (..., 1, 1, n_t)
    elif canon == both:
        # Inclusion-exclusion over (R = r) OR (T = t).
        p_y_event = ad.sub(ad.add(ad.expand_last(mg["yr"]), ad.expand_at(mg["yt"], -2)), joint)
        p_event = ad.sub(
            ad.add(ad.expand_at(ad.expand_last(mg["r"]), -3),
                   ad.expand_at(ad.expand_at(mg["t"], -2), -3)),
            ad.expand_at(mg["rt"], -3))
    else:
        p_y_event = joint
        p_event = ad.expand_at(mg["rt"], -3)                      # (..., 1, n_r, n_t)
    contrib = ad.xlog2_ratio(joint, p_y_event, ad.mul(p_event, p_y))
    return ad.asum(contrib, axis=(-3, -2, -1))


def isx_redundancy(joint, beta):
    """Shared-exclusions redundancy of the antichain ``beta``, in bits."""
    check_joint(joint)
    return _isx(joint, _canon(beta), _marginals(joint))


def mutual_information(joint, sources):
    """Mutual information between the output and a subset of the sources."""
    check_joint(joint)
    parts = _source_axes(sources)
    mg = _marginals(joint)
    if parts == {"r"}:
        return _isx(joint, frozenset({frozenset("r")}), mg)
    if parts == {"t"}:
        return _isx(joint, frozenset({frozenset("t")}), mg)
    return _isx(joint, frozenset({frozenset("rt")}), mg)


def pid_atoms(joint) -> PIDAtoms:
    """The five entropy atoms; self-redundancy ties them to the three MIs."""
    check_joint(joint)
    mg = _marginals(joint)
    red = _isx(joint, frozenset({frozenset("r"), frozenset("t")}), mg)
    info_r = _isx(joint, frozenset({frozenset("r")}), mg)
    info_t = _isx(joint, frozenset({frozenset("t")}), mg)
    info_rt = _isx(joint, frozenset({frozenset("rt")}), mg)
    unq_r = ad.sub(info_r, red)
    unq_t = ad.sub(info_t, red)
    syn = ad.sub(info_rt, ad.add(ad.add(unq_r, unq_t), red))
    res = ad.sub(_entropy_last(mg["y"]), info_rt)
    return PIDAtoms(unq_r, unq_t, red, syn, res)


def goal_value(atoms: PIDAtoms, weights: GoalWeights):
    """The training objective: a fixed linear combination of the atoms.

    Zero-coefficient terms are dropped so the backward pass never visits
    their subgraphs; with all coefficients zero the result is plain 0.0.
    """
    total = None
    for coeff, atom in zip(weights, atoms):
        if not np.isfinite(coeff):
            raise ParameterError(f"goal coefficients must be finite, got {tuple(weights)}")
        if coeff == 0.0:
            continue
        term = ad.mul(float(coeff), atom)
        total = term if total is None else ad.add(total, term)
    return 0.0 if total is None else total


def co_information(joint):
    """I(Y:R) + I(Y:T) - I(Y:R,T); equals redundancy minus synergy."""
    check_joint(joint)
    mg = _marginals(joint)
    info_r = _isx(joint, frozenset({frozenset("r")}), mg)
    info_t = _isx(joint, frozenset({frozenset("t")}), mg)
    info_rt = _isx(joint, frozenset({frozenset("rt")}), mg)
    return ad.sub(ad.add(info_r, info_t), info_rt)


def debug_record(joint) -> dict:
    """Plain-value dump of one joint and everything derived from it."""
    check_joint(joint)
    v = value_of(joint)
    if v.ndim != 3:
        raise DimensionError("debug_record expects a single (2, n_r, n_t) joint")
    atoms = pid_atoms(v)
    return {
        "joint": v.tolist(),
        "isx": {
            "both_sources": float(value_of(isx_redundancy(v, BOTH_SOURCES))),
            "only_r": float(value_of(isx_redundancy(v, ONLY_R))),
            "only_t": float(value_of(isx_redundancy(v, ONLY_T))),
            "joint_sources": float(value_of(isx_redundancy(v, JOINT_SOURCES))),
        },
        "atoms": {k: float(value_of(x)) for k, x in atoms._asdict().items()},
        "mi": {
            "r": float(value_of(mutual_information(v, "r"))),
            "t": float(value_of(mutual_information(v, "t"))),
            "rt": float(value_of(mutual_information(v, "rt"))),
        },
        "h_y": float(value_of(_entropy_last(np.sum(v, axis=(-2, -1))))),
    }
