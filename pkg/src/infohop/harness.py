"""Experiment protocols: accuracy, capacity, stability, information profiles,
goal landscapes, and goal search.

Every protocol is a pure function of (configuration, seed list). Work is
split into independent cells, one per (seed, load) pair, that derive their
own named random streams, so results do not depend on how many worker
processes execute them. Cells limit the BLAS pool to one thread, which
keeps summation orders fixed regardless of ``jobs``.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import seeds
from .cmaes import CMAES
from .errors import DimensionError, ParameterError
from .hopfield import hebbian_train, recall_batch
from .infomorphic import (InfomorphicNetwork, NeuronSamples, TrainConfig,
                          estimate_joint, init_network, neuron_samples, train)
from .patterns import corrupt, gen_correlated_patterns, gen_iid_patterns, load_patterns
from .pid import GoalWeights, PIDAtoms, pid_atoms

ATOM_COLUMNS = ("unq_R", "unq_T", "red", "syn", "res")


# ---------------------------------------------------------------------------
# Building blocks: pattern sources, trainers, parallel map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PatternSource:
    kind: str = "iid"                    # iid | correlated | file
    persistence: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("iid", "correlated", "file"):
            raise ParameterError(f"unknown pattern source {self.kind!r}")
        if self.kind == "correlated" and self.persistence is None:
            raise ParameterError("correlated patterns need a persistence value")
        if self.kind == "file" and not self.path:
            raise ParameterError("file pattern source needs a path")

    def generate(self, m: int, N: int, rng) -> np.ndarray:
        if self.kind == "iid":
            return gen_iid_patterns(m, N, rng)
        if self.kind == "correlated":
            return gen_correlated_patterns(m, N, self.persistence, rng)
        pats = load_patterns(self.path)
        if pats.shape[1] != N:
            raise DimensionError(f"{self.path}: patterns have N={pats.shape[1]}, expected {N}")
        if pats.shape[0] < m:
            raise DimensionError(f"{self.path}: need {m} patterns, file has {pats.shape[0]}")
        return pats[:m]


@dataclass(frozen=True)
class Trainer:
    method: str                          # hebbian | infomorphic
    config: TrainConfig | None = None

    def __post_init__(self):
        if self.method not in ("hebbian", "infomorphic"):
            raise ParameterError(f"unknown training method {self.method!r}")
        if self.method == "infomorphic" and self.config is None:
            raise ParameterError("infomorphic training needs a TrainConfig")

    def train(self, patterns: np.ndarray, seed: int) -> np.ndarray:
        """Weight matrix for one training cell; deterministic in (patterns, seed)."""
        if self.method == "hebbian":
            return hebbian_train(patterns)
        rng = seeds.stream(seed, "init", patterns.shape[0])
        net = init_network(patterns.shape[1], self.config.lambda_r, rng,
                           self.config.target_weight)
        train(net, patterns, self.config)
        return net.w_r

    def target_weights(self, N: int) -> np.ndarray:
        w = self.config.target_weight if self.config is not None else 2.3
        return np.full(N, float(w))


def pmap(fn: Callable, items: Sequence, jobs: int = 1) -> list:
    """Order-preserving map over independent cells, optionally in processes."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(processes=min(jobs, len(items))) as pool:
        return pool.map(fn, items, chunksize=1)


# ---------------------------------------------------------------------------
# Accuracy
# ---------------------------------------------------------------------------

def _weights_of(weights_or_net) -> np.ndarray:
    if isinstance(weights_or_net, InfomorphicNetwork):
        return weights_or_net.w_r
    return np.asarray(weights_or_net, dtype=np.float64)


def _similarities(w: np.ndarray, patterns: np.ndarray, max_iter: int) -> np.ndarray:
    pats = np.asarray(patterns, dtype=np.float64)
    finals = recall_batch(w, pats, max_iter)
    return np.sum(finals * pats, axis=1) / pats.shape[1]


def accuracy_cos(weights_or_net, patterns, max_iter: int = 100) -> float:
    """Mean cosine similarity between recalled states and their patterns."""
    return float(np.mean(_similarities(_weights_of(weights_or_net), patterns, max_iter)))


def accuracy_threshold(weights_or_net, patterns, theta: float = 0.95,
                       max_iter: int = 100) -> float:
    """Fraction of patterns recalled with similarity >= theta."""
    if not 0.0 < theta <= 1.0:
        raise ParameterError(f"theta must be in (0, 1], got {theta}")
    sims = _similarities(_weights_of(weights_or_net), patterns, max_iter)
    return float(np.mean(sims >= theta))


# ---------------------------------------------------------------------------
# Capacity
# ---------------------------------------------------------------------------

@dataclass
class CapacityResult:
    alpha_c: float                      # median over seeds
    per_seed: list[float]
    ci95: tuple[float, float]
    rows: list[dict] = field(default_factory=list)  # scan detail per (seed, load)


def expected_constant_neurons(N: int, alpha: float) -> float:
    """Expected count of neurons whose target is identical across patterns."""
    if alpha * N < 1.0:
        raise ParameterError(f"need alpha*N >= 1, got {alpha * N}")
    return N / 2.0 ** (alpha * N - 1.0)


def bootstrap_ci(samples, level: float = 0.95, resamples: int = 10000,
                 seed=0) -> tuple[float, float]:
    """Percentile bootstrap interval for the median."""
    data = np.asarray(samples, dtype=np.float64)
    if data.size < 2:
        raise ParameterError(f"need at least 2 samples, got {data.size}")
    if not 0.0 < level < 1.0:
        raise ParameterError(f"level must be in (0, 1), got {level}")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, data.size, size=(resamples, data.size))
    medians = np.median(data[idx], axis=1)
    tail = (1.0 - level) / 2.0
    lo, hi = np.quantile(medians, [tail, 1.0 - tail])
    return float(lo), float(hi)


def load_grid(N: int, alpha_step: float, alpha_max: float) -> list[tuple[float, int]]:
    """(grid alpha, pattern count) pairs with at least one pattern each."""
    if alpha_step <= 0.0 or alpha_max < alpha_step:
        raise ParameterError(f"bad load grid: step={alpha_step}, max={alpha_max}")
    grid = []
    k = 1
    while k * alpha_step <= alpha_max + 1e-9:
        alpha = k * alpha_step
        m = int(round(alpha * N))
        if m >= 1:
            grid.append((alpha, m))
        k += 1
    return grid


def _accuracy_cell(payload) -> dict:
    trainer, source, N, alpha, m, seed, max_iter, theta = payload
    with threadpool_limits(limits=1):
        pats = source.generate(m, N, seeds.stream(seed, "patterns", m))
        w = trainer.train(pats, seed)
        sims = _similarities(w, pats, max_iter)
    return {
        "alpha": alpha, "m": m, "seed": seed,
        "a_cos": float(np.mean(sims)),
        "a_theta": float(np.mean(sims >= theta)),
    }


def estimate_capacity(trainer: Trainer, source: PatternSource, N: int,
                      seed_list: Sequence[int], alpha_step: float = 0.02,
                      alpha_max: float = 0.4, threshold: float = 0.95,
                      max_iter: int = 100, theta: float = 0.95,
                      finite_size_cut: float = 0.5, jobs: int = 1,
                      bootstrap_seed=0) -> CapacityResult:
    """Scan the load grid per seed; capacity is the first sustainable failure.

    Per seed, the capacity is the smallest grid load whose accuracy drops to
    threshold or below, ignoring failures at loads small enough that neurons
    with constant target input are expected (finite-size effects); if no
    load fails, the scan upper bound plus one step is reported.
    """
    seed_list = list(seed_list)
    if not seed_list:
        raise ParameterError("need at least one seed")
    grid = load_grid(N, alpha_step, alpha_max)
    cells = [(trainer, source, N, alpha, m, seed, max_iter, theta)
             for seed in seed_list for (alpha, m) in grid]
    rows = pmap(_accuracy_cell, cells, jobs)
    for r in rows:
        r["excluded"] = expected_constant_neurons(N, r["m"] / N) > finite_size_cut
    per_seed = []
    for seed in seed_list:
        mine = sorted((r for r in rows if r["seed"] == seed), key=lambda r: r["alpha"])
        cap = next((r["alpha"] for r in mine
                    if not r["excluded"] and r["a_cos"] <= threshold),
                   grid[-1][0] + alpha_step)
        per_seed.append(cap)
    if len(per_seed) >= 2:
        ci = bootstrap_ci(per_seed, seed=seeds.stream(bootstrap_seed, "bootstrap"))
    else:
        ci = (per_seed[0], per_seed[0])
    return CapacityResult(alpha_c=float(np.median(per_seed)), per_seed=per_seed,
                          ci95=ci, rows=rows)


# ---------------------------------------------------------------------------
# Stability
# ---------------------------------------------------------------------------

def _stability_cell(payload) -> dict:
    trainer, source, N, alpha, m, seed, epsilon, f_grid, max_iter = payload
    with threadpool_limits(limits=1):
        pats = source.generate(m, N, seeds.stream(seed, "patterns", m))
        w = trainer.train(pats, seed)
        f_max = 0.0
        for fi, f in enumerate(f_grid):
            inits = np.empty_like(pats)
            for p in range(m):
                inits[p] = corrupt(pats[p], f, seeds.stream(seed, "corrupt", m, fi, p))
            finals = recall_batch(w, inits, max_iter)
            a_cos = float(np.mean(np.sum(finals * pats, axis=1) / N))
            if a_cos >= epsilon:
                f_max = max(f_max, float(f))
    return {"alpha": alpha, "seed": seed, "f_max": f_max}


def stability_profile(trainer: Trainer, source: PatternSource, N: int,
                      alphas: Sequence[float], seed_list: Sequence[int],
                      epsilon: float = 0.95, f_grid: Sequence[float] = tuple(np.arange(0.0, 0.52, 0.02)),
                      max_iter: int = 100, jobs: int = 1) -> list[dict]:
    """Largest corruption fraction per load that still recalls above epsilon."""
    if not alphas or not list(f_grid):
        raise ParameterError("need nonempty load and flip grids")
    cells = [(trainer, source, N, float(alpha), int(round(alpha * N)), seed,
              epsilon, tuple(float(f) for f in f_grid), max_iter)
             for seed in seed_list for alpha in alphas
             if int(round(alpha * N)) >= 1]
    return pmap(_stability_cell, cells, jobs)


# ---------------------------------------------------------------------------
# Information profiles
# ---------------------------------------------------------------------------

def pid_snapshot(w_r: np.ndarray, w_t: np.ndarray, patterns: np.ndarray,
                 binning, chunk: int = 64) -> PIDAtoms:
    """Per-neuron atoms of a trained network, clamped to the patterns.

    The outputs follow the same sigmoid conditional and soft binning as
    training, so Hebbian and goal-trained networks are directly comparable.
    Neurons are processed in chunks only to bound memory.
    """
    pats = np.asarray(patterns, dtype=np.float64)
    n = pats.shape[1]
    samples = neuron_samples(w_r, w_t, pats)
    parts = []
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        sub = NeuronSamples(samples.r[start:stop], samples.t[start:stop],
                            samples.cond[start:stop])
        parts.append(pid_atoms(estimate_joint(sub, binning)))
    return PIDAtoms(*(np.concatenate([np.atleast_1d(p[i]) for p in parts])
                      for i in range(5)))


def _profile_cell(payload) -> dict:
    trainer, source, N, alpha, m, seed, binning, theta, max_iter = payload
    with threadpool_limits(limits=1):
        pats = source.generate(m, N, seeds.stream(seed, "patterns", m))
        w = trainer.train(pats, seed)
        atoms = pid_snapshot(w, trainer.target_weights(N), pats, binning)
        sims = _similarities(w, pats, max_iter)
    row = {"alpha": alpha, "seed": seed,
           "a_cos": float(np.mean(sims)),
           "a_theta": float(np.mean(sims >= theta))}
    for name, values in zip(ATOM_COLUMNS, atoms):
        row[name] = float(np.mean(values))
    return row


def pid_profile(trainer: Trainer, source: PatternSource, N: int,
                alphas: Sequence[float], seed_list: Sequence[int], binning,
                theta: float = 0.95, max_iter: int = 100, jobs: int = 1) -> list[dict]:
    """Mean per-neuron atoms and recall accuracy across a load grid."""
    cells = [(trainer, source, N, float(alpha), int(round(alpha * N)), seed,
              binning, theta, max_iter)
             for seed in seed_list for alpha in alphas
             if int(round(alpha * N)) >= 1]
    return pmap(_profile_cell, cells, jobs)


# ---------------------------------------------------------------------------
# Goal landscape and goal search
# ---------------------------------------------------------------------------

def goal_landscape(base_config: TrainConfig, goals: Sequence[GoalWeights],
                   source: PatternSource, N: int, seed_list: Sequence[int],
                   jobs: int = 1, **capacity_kwargs) -> list[dict]:
    """Capacity estimate for every goal in the list."""
    rows = []
    for goal in goals:
        trainer = Trainer("infomorphic", replace(base_config, goal=goal))
        result = estimate_capacity(trainer, source, N, seed_list, jobs=jobs,
                                   **capacity_kwargs)
        rows.append({
            "g_unq_R": goal.unq_r, "g_unq_T": goal.unq_t, "g_red": goal.red,
            "g_syn": goal.syn, "g_res": goal.res,
            "alpha_c_median": result.alpha_c,
            "ci_lo": result.ci95[0], "ci_hi": result.ci95[1],
        })
    return rows


def optimize_goal(base_config: TrainConfig, source: PatternSource, N: int,
                  box: tuple, budget: int, seed=0, train_seed: int = 0,
                  validate_seeds: Sequence[int] = (), popsize: int | None = None,
                  jobs: int = 1, **capacity_kwargs):
    """CMA-ES search for goal coefficients that maximize capacity.

    Each candidate is scored on a single training seed; the best goal is
    then re-estimated on the held-out validation seeds. Returns
    (best GoalWeights, validated CapacityResult or None, trace rows).
    """
    lo = np.asarray(box[0], dtype=np.float64)
    hi = np.asarray(box[1], dtype=np.float64)
    if lo.shape != (5,) or hi.shape != (5,):
        raise ParameterError("search box must bound the 5 goal coefficients")

    def capacity_of(gamma: np.ndarray, seed_set) -> CapacityResult:
        trainer = Trainer("infomorphic", replace(base_config, goal=GoalWeights(*gamma)))
        return estimate_capacity(trainer, source, N, seed_set, jobs=jobs,
                                 **capacity_kwargs)

    es = CMAES(x0=(lo + hi) / 2.0, sigma0=float(np.max(hi - lo)) * 0.3,
               seed=seeds.stream(seed, "cmaes"), popsize=popsize, bounds=(lo, hi))
    if budget < es.lam:
        raise ParameterError(f"budget {budget} is below one population of {es.lam}")
    trace = []
    while es.evaluations + es.lam <= budget:
        xs = es.ask()
        fs = []
        for x in xs:
            cap = capacity_of(x, [train_seed]).alpha_c
            fs.append(-cap)
            trace.append({"evaluation": len(trace) + 1,
                          "g_unq_R": float(x[0]), "g_unq_T": float(x[1]),
                          "g_red": float(x[2]), "g_syn": float(x[3]),
                          "g_res": float(x[4]), "alpha_c": cap})
        es.tell(xs, fs)
    best = GoalWeights(*(float(v) for v in es.best_x))
    validated = capacity_of(np.asarray(es.best_x), list(validate_seeds)) if validate_seeds else None
    return best, validated, trace
