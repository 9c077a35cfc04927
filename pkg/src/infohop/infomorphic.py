"""Recurrent networks whose neurons learn by ascending an information goal.

During training every neuron sees two inputs per pattern: its recurrent
drive r (weighted sum of the other neurons, which are clamped to the
pattern) and a fixed-weight copy t of its own target element. The neuron's
output is +1 with probability sigmoid(r + t). Per epoch, each neuron builds
a soft-binned joint distribution over (output, r, t) from all patterns,
evaluates its goal on the information atoms of that joint, and takes one
Adam ascent step on its incoming recurrent weights. Target weights stay
frozen and the recurrent diagonal stays zero.

Neurons are independent within an epoch: the goal of neuron i depends only
on row i of the recurrent weights, so the whole epoch is evaluated as one
batched tape whose gradient rows equal the per-neuron gradients.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import autodiff as ad
from .autodiff import AdamState, Var, adam_step, value_of
from .binning import BinningConfig, axis_weights, fit_grid, kernel_widths
from .errors import DimensionError, NumericDomainError, ParameterError
from .hopfield import load_weights, save_weights
from .patterns import check_patterns
from .pid import GoalWeights, PIDAtoms, goal_value, pid_atoms

logger = logging.getLogger(__name__)

TARGET_WEIGHT = 2.3  # frozen per-neuron weight on the teaching input


@dataclass
class InfomorphicNetwork:
    w_r: np.ndarray  # (N, N) recurrent weights, zero diagonal
    w_t: np.ndarray  # (N,) frozen positive target weights

    @property
    def n_neurons(self) -> int:
        return self.w_r.shape[0]


@dataclass(frozen=True)
class TrainConfig:
    goal: GoalWeights
    epochs: int = 5000
    reps: int = 1
    eta: float = 0.05
    lambda_r: float = 1e-3
    target_weight: float = TARGET_WEIGHT
    binning: BinningConfig = field(default_factory=BinningConfig)
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ParameterError(f"epochs must be >= 0, got {self.epochs}")
        if self.reps < 1:
            raise ParameterError(f"reps must be >= 1, got {self.reps}")
        if self.eta <= 0.0:
            raise ParameterError(f"learning rate must be > 0, got {self.eta}")


class NeuronSamples(NamedTuple):
    """Per-pattern training inputs of one neuron (or a batch of neurons).

    All fields have shape (..., m): recurrent drive, weighted target, and
    the analytic probability of output +1.
    """

    r: object
    t: object
    cond: object


class ForwardSample(NamedTuple):
    """One stochastic training step of the whole network on one pattern."""

    r: np.ndarray
    t: np.ndarray
    cond: np.ndarray
    y: np.ndarray


class EpochStats(NamedTuple):
    epoch: int
    unq_r: float
    unq_t: float
    red: float
    syn: float
    res: float
    goal: float


def init_network(N: int, lambda_r: float = 1e-3, seed=0,
                 target_weight: float = TARGET_WEIGHT) -> InfomorphicNetwork:
    """Gaussian recurrent init with std lambda_r*sqrt(2/N), zero diagonal."""
    if N < 2:
        raise DimensionError(f"need N >= 2, got {N}")
    if target_weight <= 0.0:
        raise ParameterError(f"target weight must be > 0, got {target_weight}")
    rng = np.random.default_rng(seed)
    w_r = rng.normal(0.0, lambda_r * np.sqrt(2.0 / N), size=(N, N))
    np.fill_diagonal(w_r, 0.0)
    return InfomorphicNetwork(w_r=w_r, w_t=np.full(N, float(target_weight)))


def forward_train(net: InfomorphicNetwork, pattern: np.ndarray, seed) -> ForwardSample:
    """Clamp the network to a pattern, take one stochastic step.

    Returns the per-neuron inputs, the +1 probabilities, and outputs sampled
    from them (reproducible given the seed).
    """
    xi = np.asarray(pattern, dtype=np.float64)
    if xi.shape != (net.n_neurons,):
        raise DimensionError(f"pattern shape {xi.shape} does not match N={net.n_neurons}")
    r = net.w_r @ xi
    t = net.w_t * xi
    cond = ad.sigmoid(r + t)
    y = np.where(np.random.default_rng(seed).random(xi.size) < cond, 1.0, -1.0)
    return ForwardSample(r=r, t=t, cond=cond, y=y)


def neuron_samples(w_r, w_t, patterns: np.ndarray) -> NeuronSamples:
    """Training inputs of all neurons over all patterns, shape (N, m) each.

    w_r may be a tape variable (its diagonal is masked out on the tape so
    self-connections receive no gradient); w_t and patterns are data.
    """
    pats = np.asarray(patterns, dtype=np.float64)
    n = pats.shape[1]
    mask = 1.0 - np.eye(n)
    masked = ad.mul(w_r, mask)
    r = ad.matmul(masked, pats.T)                # (N, m)
    t = np.asarray(w_t, dtype=np.float64)[:, None] * pats.T
    cond = ad.sigmoid(ad.add(r, t))
    return NeuronSamples(r=r, t=t, cond=cond)


def estimate_joint(samples: NeuronSamples, binning: BinningConfig):
    """Soft-binned joint over (output, r bin, t bin); shape (..., 2, n_r, n_t).

    The bin mass is the soft-weighted average of the per-sample analytic
    conditionals, which reduces to p(r,t)*p(y|r,t) in the hard-binning
    limit and keeps the whole estimate differentiable.
    """
    m = ad.shape_of(samples.r)[-1]
    grid = fit_grid(samples.r, samples.t, binning)
    ell_r, ell_t = kernel_widths(grid, binning)
    wr = axis_weights(samples.r, grid.r_lo, grid.c_r, binning.n_r, ell_r)
    wt = axis_weights(samples.t, grid.t_lo, grid.c_t, binning.n_t, ell_t)
    wr_t = ad.swap_last2(wr)                                      # (..., n_r, m)
    cond = ad.expand_last(samples.cond)                           # (..., m, 1)
    p_plus = ad.matmul(wr_t, ad.mul(wt, cond))
    p_minus = ad.matmul(wr_t, ad.mul(wt, ad.sub(1.0, cond)))
    joint = ad.div(ad.stack([p_minus, p_plus], axis=-3), float(m))
    total = ad.asum(joint, axis=(-3, -2, -1), keepdims=True)
    return ad.div(joint, total)


def _epoch_pass(w_r: np.ndarray, w_t: np.ndarray, patterns: np.ndarray,
                config: TrainConfig):
    """One batched forward/backward pass; returns (grad, atoms, goals)."""
    w = Var(w_r)
    samples = neuron_samples(w, w_t, patterns)
    joint = estimate_joint(samples, config.binning)
    atoms = pid_atoms(joint)
    goals = goal_value(atoms, config.goal)
    total = ad.asum(goals)
    if isinstance(total, Var):
        grad = ad.gradients(total, [w])[0]
    else:  # all goal coefficients zero: nothing reaches the weights
        grad = np.zeros_like(w.value)
    return grad, atoms, goals


def _neuron_pass(w_r: np.ndarray, w_t: np.ndarray, patterns: np.ndarray,
                 config: TrainConfig, i: int):
    """Per-neuron fallback pass used to isolate numeric-domain failures."""
    pats = np.asarray(patterns, dtype=np.float64)
    row = Var(w_r[i])
    mask = np.ones(pats.shape[1])
    mask[i] = 0.0
    r = ad.matmul(pats, ad.mul(row, mask))
    t = w_t[i] * pats[:, i]
    cond = ad.sigmoid(ad.add(r, t))
    joint = estimate_joint(NeuronSamples(r=r, t=t, cond=cond), config.binning)
    atoms = pid_atoms(joint)
    goal = goal_value(atoms, config.goal)
    if isinstance(goal, Var):
        grad = ad.gradients(goal, [row])[0]
    else:
        grad = np.zeros_like(row.value)
    return grad, atoms, goal


def train_epoch(net: InfomorphicNetwork, patterns: np.ndarray, config: TrainConfig,
                adam: AdamState) -> tuple[PIDAtoms, np.ndarray]:
    """One pass over all patterns: per-neuron atoms/goal, weights updated.

    A neuron whose joint degenerates numerically is skipped for the epoch
    (weights and moments untouched) with a diagnostic.
    """
    pats = check_patterns(patterns)
    if pats.shape[1] != net.n_neurons:
        raise DimensionError(f"patterns have N={pats.shape[1]}, network has N={net.n_neurons}")
    if config.reps > 1:
        pats = np.tile(pats, (config.reps, 1))
    n = net.n_neurons
    skipped: list[int] = []
    try:
        grad, atoms, goals = _epoch_pass(net.w_r, net.w_t, pats, config)
        atom_values = PIDAtoms(*(value_of(a).copy() for a in atoms))
        goal_values = np.broadcast_to(value_of(goals), (n,)).copy()
    except NumericDomainError:
        # Retry neuron by neuron so healthy rows still get their step.
        grad = np.zeros_like(net.w_r)
        atom_values = PIDAtoms(*(np.full(n, np.nan) for _ in range(5)))
        goal_values = np.full(n, np.nan)
        for i in range(n):
            try:
                g_row, atoms_i, goal_i = _neuron_pass(net.w_r, net.w_t, pats, config, i)
            except NumericDomainError as exc:
                skipped.append(i)
                logger.warning("neuron %d: degenerate joint, step skipped (%s)", i, exc)
                continue
            grad[i] = g_row
            for dst, src in zip(atom_values, atoms_i):
                dst[i] = float(value_of(src))
            goal_values[i] = float(value_of(goal_i))
    bad = ~np.all(np.isfinite(grad), axis=1)
    if np.any(bad):
        for i in np.flatnonzero(bad):
            if i not in skipped:
                skipped.append(int(i))
                logger.warning("neuron %d: non-finite gradient, step skipped", i)
        grad[bad] = 0.0
    keep_rows = np.asarray(skipped, dtype=int)
    saved_w = net.w_r[keep_rows].copy() if keep_rows.size else None
    saved_m = adam.first_moment[keep_rows].copy() if keep_rows.size else None
    saved_v = adam.second_moment[keep_rows].copy() if keep_rows.size else None
    net.w_r = adam_step(net.w_r, grad, adam, config.eta)
    if keep_rows.size:
        net.w_r[keep_rows] = saved_w
        adam.first_moment[keep_rows] = saved_m
        adam.second_moment[keep_rows] = saved_v
    return atom_values, goal_values


def train(net: InfomorphicNetwork, patterns: np.ndarray,
          config: TrainConfig) -> list[EpochStats]:
    """Run the full epoch loop; returns per-epoch telemetry (means over neurons)."""
    adam = AdamState.for_shape(net.w_r.shape)
    telemetry: list[EpochStats] = []
    for epoch in range(1, config.epochs + 1):
        atoms, goals = train_epoch(net, patterns, config, adam)
        telemetry.append(EpochStats(
            epoch=epoch,
            unq_r=float(np.nanmean(atoms.unq_r)),
            unq_t=float(np.nanmean(atoms.unq_t)),
            red=float(np.nanmean(atoms.red)),
            syn=float(np.nanmean(atoms.syn)),
            res=float(np.nanmean(atoms.res)),
            goal=float(np.nanmean(goals)),
        ))
    return telemetry


def fit(patterns: np.ndarray, config: TrainConfig) -> tuple[InfomorphicNetwork, list[EpochStats]]:
    """Initialize from the config seed and train; the usual entry point."""
    pats = check_patterns(patterns)
    from . import seeds  # local import to avoid a cycle at package init

    net = init_network(pats.shape[1], config.lambda_r,
                       seeds.stream(config.seed, "init"), config.target_weight)
    telemetry = train(net, pats, config)
    return net, telemetry


# ---------------------------------------------------------------------------
# Checkpoints: binary weights plus a JSON sidecar
# ---------------------------------------------------------------------------

def save_checkpoint(directory, net: InfomorphicNetwork, config: TrainConfig,
                    epochs_run: int) -> dict:
    """Write checkpoint.amw (recurrent weights) and checkpoint.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    weights_path = directory / "checkpoint.amw"
    save_weights(weights_path, net.w_r)
    sidecar = {
        "n_neurons": net.n_neurons,
        "w_t": [float(v) for v in net.w_t],
        "epochs_run": int(epochs_run),
        "seed": int(config.seed),
        "config": config_to_dict(config),
    }
    sidecar_path = directory / "checkpoint.json"
    sidecar_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
    return {"weights": str(weights_path), "sidecar": str(sidecar_path)}


def load_checkpoint(directory) -> tuple[InfomorphicNetwork, dict]:
    directory = Path(directory)
    w_r = load_weights(directory / "checkpoint.amw")
    meta = json.loads((directory / "checkpoint.json").read_text(encoding="utf-8"))
    w_t = np.asarray(meta["w_t"], dtype=np.float64)
    if w_t.shape != (w_r.shape[0],):
        raise DimensionError(f"sidecar w_t has shape {w_t.shape}, weights are {w_r.shape}")
    return InfomorphicNetwork(w_r=w_r, w_t=w_t), meta


def config_to_dict(config: TrainConfig) -> dict:
    d = {
        "goal": list(config.goal),
        "epochs": config.epochs,
        "reps": config.reps,
        "eta": config.eta,
        "lambda_r": config.lambda_r,
        "target_weight": config.target_weight,
        "binning": {
            "n_r": config.binning.n_r,
            "n_t": config.binning.n_t,
            "sigma_r": config.binning.sigma_r,
            "sigma_t": config.binning.sigma_t,
            "padding": config.binning.padding,
        },
        "seed": config.seed,
    }
    return d


def config_from_dict(d: dict) -> TrainConfig:
    binning = BinningConfig(**d.get("binning", {}))
    return TrainConfig(
        goal=GoalWeights(*d["goal"]),
        epochs=d.get("epochs", 5000),
        reps=d.get("reps", 1),
        eta=d.get("eta", 0.05),
        lambda_r=d.get("lambda_r", 1e-3),
        target_weight=d.get("target_weight", TARGET_WEIGHT),
        binning=binning,
        seed=d.get("seed", 0),
    )
