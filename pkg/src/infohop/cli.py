"""Command-line surface: pattern generation, training, evaluation, and the
batch experiment protocols.

Every experiment command resolves one configuration (file plus flag
overrides), runs inside a single directory, and leaves behind a manifest,
a config snapshot, CSV tables, and rendered figures. Re-running a command
from its config snapshot reproduces the tables byte for byte, whatever
``--jobs`` says.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or
numeric error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np
from threadpoolctl import threadpool_limits

from . import plots, seeds
from .config import ExperimentConfig, load_config, save_config
from .errors import (DimensionError, InfohopError, NormalizationError,
                     NumericDomainError, ParameterError)
from .harness import (ATOM_COLUMNS, estimate_capacity, goal_landscape,
                      load_grid, optimize_goal, pid_profile, stability_profile)
from .hopfield import hebbian_train, load_weights, recall_batch, save_weights
from .infomorphic import fit, load_checkpoint, save_checkpoint
from .patterns import (corrupt, gen_correlated_patterns, gen_iid_patterns,
                       load_patterns, save_patterns)
from .pid import GoalWeights
from .reporting import RunManifest, prepare_run_dir, write_csv


def _parse_list(text, cast):
    return [cast(tok) for tok in str(text).split(",") if tok.strip() != ""]


def _resolve_config(config_path, method=None, n=None, seeds_opt=None, jobs=None) -> ExperimentConfig:
    cfg = load_config(config_path) if config_path else ExperimentConfig()
    if method is not None:
        cfg.method = method
    if n is not None:
        cfg.network.N = n
    if seeds_opt:
        cfg.run.seeds = _parse_list(seeds_opt, int)
    if jobs is not None:
        cfg.run.jobs = jobs
    return cfg.validate()


def _start_run(command: str, cfg: ExperimentConfig, out, force: bool):
    out_dir = prepare_run_dir(out, force=force)
    save_config(out_dir / "config.yaml", cfg)
    manifest = RunManifest(command, cfg.to_dict(), cfg.run.seeds, out_dir)
    manifest.add_artifact(out_dir / "config.yaml")
    return out_dir, manifest


config_option = click.option("--config", "config_path", type=click.Path(exists=True),
                             default=None, help="YAML config file.")
method_option = click.option("--method", type=click.Choice(["hebbian", "infomorphic"]),
                             default=None, help="Training rule (overrides config).")
seeds_option = click.option("--seeds", "seeds_opt", default=None,
                            help="Comma-separated seed list (overrides config).")
jobs_option = click.option("--jobs", type=int, default=None,
                           help="Worker processes for independent cells.")
out_option = click.option("--out", required=True, help="Output directory.")
force_option = click.option("--force", is_flag=True, help="Reuse a non-empty output directory.")
plots_option = click.option("--plots/--no-plots", "render_plots", default=True,
                            help="Render figures next to the tables.")


@click.group()
def cli():
    """Associative-memory experiments: Hebbian and information-goal learning."""


@cli.command()
@click.option("--m", type=int, required=True, help="Number of patterns.")
@click.option("--n", type=int, required=True, help="Neurons per pattern.")
@click.option("--source", type=click.Choice(["iid", "correlated"]), default="iid")
@click.option("--persistence", type=float, default=None,
              help="Repeat probability for correlated patterns.")
@click.option("--seed", type=int, default=0)
@click.option("--out", required=True, help="Pattern file to write.")
def generate(m, n, source, persistence, seed, out):
    """Write a bipolar pattern file (one pattern per line)."""
    rng = seeds.stream(seed, "patterns", m)
    if source == "correlated":
        if persistence is None:
            raise click.UsageError("--persistence is required for correlated patterns")
        pats = gen_correlated_patterns(m, n, persistence, rng)
    else:
        pats = gen_iid_patterns(m, n, rng)
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    save_patterns(path, pats)
    click.echo(f"wrote {m} patterns of length {n} to {path}")


@cli.command()
@config_option
@method_option
@click.option("--m", type=int, default=None, help="Pattern count (overrides config).")
@click.option("--alpha", type=float, default=None, help="Memory load (overrides config).")
@click.option("--n", type=int, default=None, help="Network size (overrides config).")
@click.option("--epochs", type=int, default=None, help="Training epochs (overrides config).")
@click.option("--seed", type=int, default=None, help="Run seed (overrides config).")
@out_option
@force_option
@plots_option
def train(config_path, method, m, alpha, n, epochs, seed, out, force, render_plots):
    """Train one network and write a checkpoint plus per-epoch telemetry."""
    cfg = _resolve_config(config_path, method=method, n=n)
    if m is not None:
        cfg.patterns.m, cfg.patterns.alpha = m, None
    if alpha is not None:
        cfg.patterns.alpha, cfg.patterns.m = alpha, None
    if epochs is not None:
        cfg.training.epochs = epochs
    if seed is not None:
        cfg.run.seeds = [seed]
    cfg.validate()
    run_seed = int(cfg.run.seeds[0])
    count = cfg.pattern_count()
    out_dir, manifest = _start_run("train", cfg, out, force)
    try:
        with threadpool_limits(limits=1):
            pats = cfg.pattern_source().generate(count, cfg.network.N,
                                                 seeds.stream(run_seed, "patterns", count))
            if cfg.method == "hebbian":
                weights = hebbian_train(pats)
                weights_path = out_dir / "checkpoint.amw"
                save_weights(weights_path, weights)
                manifest.add_artifact(weights_path)
                telemetry = []
            else:
                train_cfg = cfg.train_config(seed=run_seed)
                net, telemetry = fit(pats, train_cfg)
                for name, path in save_checkpoint(out_dir, net, train_cfg,
                                                  cfg.training.epochs).items():
                    manifest.add_artifact(path)
        rows = [{"epoch": s.epoch, "unq_R": s.unq_r, "unq_T": s.unq_t, "red": s.red,
                 "syn": s.syn, "res": s.res, "goal": s.goal} for s in telemetry]
        table = write_csv(out_dir / "telemetry.csv",
                          ("epoch", "unq_R", "unq_T", "red", "syn", "res", "goal"), rows)
        manifest.add_artifact(table)
        if render_plots and rows:
            manifest.add_artifact(plots.render_telemetry(rows, out_dir / "telemetry.png"))
        manifest.finish("ok")
    except BaseException as exc:
        manifest.finish("failed", error=repr(exc))
        raise
    click.echo(f"trained {cfg.method} network (N={cfg.network.N}, m={count}) -> {out_dir}")


@cli.command("eval")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True,
              help="Checkpoint directory or raw .amw weight file.")
@click.option("--patterns", "patterns_path", type=click.Path(exists=True), required=True)
@click.option("--theta", type=float, default=0.95, show_default=True)
@click.option("--flip-fraction", type=float, default=0.0, show_default=True,
              help="Corrupt each pattern by this fraction before recall.")
@click.option("--max-iter", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", default=None, help="Optional directory for eval.csv.")
@force_option
def eval_cmd(checkpoint_path, patterns_path, theta, flip_fraction, max_iter, seed, out, force):
    """Recall accuracy of a checkpoint on a pattern file."""
    path = Path(checkpoint_path)
    if path.is_dir():
        net, _ = load_checkpoint(path)
        weights = net.w_r
    else:
        weights = load_weights(path)
    pats = load_patterns(patterns_path)
    if pats.shape[1] != weights.shape[0]:
        raise DimensionError(
            f"patterns have N={pats.shape[1]}, checkpoint has N={weights.shape[0]}")
    with threadpool_limits(limits=1):
        inits = pats.copy()
        if flip_fraction > 0.0:
            for p in range(pats.shape[0]):
                inits[p] = corrupt(pats[p], flip_fraction,
                                   seeds.stream(seed, "corrupt", pats.shape[0], 0, p))
        finals = recall_batch(weights, inits, max_iter)
        sims = np.sum(finals * pats, axis=1) / pats.shape[1]
    record = {
        "a_cos": float(np.mean(sims)),
        "a_theta": float(np.mean(sims >= theta)),
        "theta": theta,
        "flip_fraction": flip_fraction,
        "seed": seed,
        "patterns": str(patterns_path),
        "checkpoint": str(checkpoint_path),
    }
    click.echo(f"a_cos={record['a_cos']:.6f} a_theta={record['a_theta']:.6f} "
               f"(theta={theta}, flips={flip_fraction})")
    if out:
        out_dir = prepare_run_dir(out, force=force)
        write_csv(out_dir / "eval.csv", tuple(record), [record])
        click.echo(f"wrote {out_dir / 'eval.csv'}")


@cli.command()
@config_option
@method_option
@click.option("--n", type=int, default=None)
@seeds_option
@click.option("--alpha-step", type=float, default=0.02, show_default=True)
@click.option("--alpha-max", type=float, default=None,
              help="Scan bound; defaults to 0.3 for hebbian, 2.0 for infomorphic.")
@jobs_option
@out_option
@force_option
@plots_option
def capacity(config_path, method, n, seeds_opt, alpha_step, alpha_max, jobs, out,
             force, render_plots):
    """Estimate memory capacity per seed with a bootstrap interval."""
    cfg = _resolve_config(config_path, method=method, n=n, seeds_opt=seeds_opt, jobs=jobs)
    if alpha_max is None:
        alpha_max = 0.3 if cfg.method == "hebbian" else 2.0
    out_dir, manifest = _start_run("capacity", cfg, out, force)
    try:
        result = estimate_capacity(
            cfg.trainer(), cfg.pattern_source(), cfg.network.N, cfg.run.seeds,
            alpha_step=alpha_step, alpha_max=alpha_max, theta=cfg.testing.theta,
            max_iter=cfg.testing.N_iter, jobs=cfg.run.jobs)
        rows = [{"method": cfg.method, "seed": s, "alpha_c": a}
                for s, a in zip(cfg.run.seeds, result.per_seed)]
        manifest.add_artifact(write_csv(out_dir / "capacity.csv",
                                        ("method", "seed", "alpha_c"), rows))
        manifest.add_artifact(write_csv(
            out_dir / "capacity_scan.csv",
            ("alpha", "m", "seed", "a_cos", "a_theta", "excluded"), result.rows))
        if render_plots:
            manifest.add_artifact(plots.render_capacity(
                result.rows, result.per_seed, result.ci95, out_dir / "capacity.png"))
        manifest.finish("ok")
    except BaseException as exc:
        manifest.finish("failed", error=repr(exc))
        raise
    click.echo(f"alpha_c median={result.alpha_c:.4f} "
               f"ci95=[{result.ci95[0]:.4f}, {result.ci95[1]:.4f}] -> {out_dir}")


def _alpha_list(alphas, alpha_step, alpha_max, N):
    if alphas:
        return _parse_list(alphas, float)
    return [a for a, _ in load_grid(N, alpha_step, alpha_max)]


@cli.command()
@config_option
@method_option
@click.option("--n", type=int, default=None)
@seeds_option
@click.option("--alphas", default=None, help="Comma-separated memory loads.")
@click.option("--alpha-step", type=float, default=0.1)
@click.option("--alpha-max", type=float, default=1.0)
@click.option("--epsilon", type=float, default=0.95, show_default=True)
@click.option("--f-step", type=float, default=0.02, show_default=True)
@click.option("--f-max", type=float, default=0.5, show_default=True)
@jobs_option
@out_option
@force_option
@plots_option
def stability(config_path, method, n, seeds_opt, alphas, alpha_step, alpha_max,
              epsilon, f_step, f_max, jobs, out, force, render_plots):
    """Largest recoverable corruption fraction across memory loads."""
    cfg = _resolve_config(config_path, method=method, n=n, seeds_opt=seeds_opt, jobs=jobs)
    alpha_values = _alpha_list(alphas, alpha_step, alpha_max, cfg.network.N)
    f_grid = [round(k * f_step, 10) for k in range(int(round(f_max / f_step)) + 1)]
    out_dir, manifest = _start_run("stability", cfg, out, force)
    try:
        rows = stability_profile(
            cfg.trainer(), cfg.pattern_source(), cfg.network.N, alpha_values,
            cfg.run.seeds, epsilon=epsilon, f_grid=f_grid,
            max_iter=cfg.testing.N_iter, jobs=cfg.run.jobs)
        manifest.add_artifact(write_csv(out_dir / "stability.csv",
                                        ("alpha", "seed", "f_max"), rows))
        if render_plots:
            manifest.add_artifact(plots.render_stability(rows, out_dir / "stability.png"))
        manifest.finish("ok")
    except BaseException as exc:
        manifest.finish("failed", error=repr(exc))
        raise
    click.echo(f"stability profile over {len(alpha_values)} loads -> {out_dir}")


@cli.command("pid-profile")
@config_option
@method_option
@click.option("--n", type=int, default=None)
@seeds_option
@click.option("--alphas", default=None, help="Comma-separated memory loads.")
@click.option("--alpha-step", type=float, default=0.05)
@click.option("--alpha-max", type=float, default=0.6)
@jobs_option
@out_option
@force_option
@plots_option
def pid_profile_cmd(config_path, method, n, seeds_opt, alphas, alpha_step, alpha_max,
                    jobs, out, force, render_plots):
    """Mean information atoms per neuron across memory loads."""
    cfg = _resolve_config(config_path, method=method, n=n, seeds_opt=seeds_opt, jobs=jobs)
    alpha_values = _alpha_list(alphas, alpha_step, alpha_max, cfg.network.N)
    out_dir, manifest = _start_run("pid-profile", cfg, out, force)
    try:
        rows = pid_profile(
            cfg.trainer(), cfg.pattern_source(), cfg.network.N, alpha_values,
            cfg.run.seeds, cfg.binning_config(), theta=cfg.testing.theta,
            max_iter=cfg.testing.N_iter, jobs=cfg.run.jobs)
        manifest.add_artifact(write_csv(
            out_dir / "profile.csv",
            ("alpha", "seed", "a_cos", "a_theta") + ATOM_COLUMNS, rows))
        if render_plots:
            manifest.add_artifact(plots.render_profile(rows, out_dir / "profile.png"))
        manifest.finish("ok")
    except BaseException as exc:
        manifest.finish("failed", error=repr(exc))
        raise
    click.echo(f"information profile over {len(alpha_values)} loads -> {out_dir}")


@cli.command()
@config_option
@click.option("--n", type=int, default=None)
@seeds_option
@click.option("--grid-unq-r", default="0", help="Comma list for the unq_R coefficient.")
@click.option("--grid-unq-t", default="0", help="Comma list for the unq_T coefficient.")
@click.option("--grid-red", default="1", help="Comma list for the red coefficient.")
@click.option("--grid-syn", default="0", help="Comma list for the syn coefficient.")
@click.option("--g-res", type=float, default=0.0, show_default=True,
              help="Fixed residual-entropy coefficient.")
@click.option("--alpha-step", type=float, default=0.02)
@click.option("--alpha-max", type=float, default=2.0)
@jobs_option
@out_option
@force_option
@plots_option
def landscape(config_path, n, seeds_opt, grid_unq_r, grid_unq_t, grid_red, grid_syn,
              g_res, alpha_step, alpha_max, jobs, out, force, render_plots):
    """Capacity over a grid of goal coefficients."""
    cfg = _resolve_config(config_path, method="infomorphic", n=n, seeds_opt=seeds_opt,
                          jobs=jobs)
    goals = [GoalWeights(unq_r=ur, unq_t=ut, red=rd, syn=sy, res=g_res)
             for ut in _parse_list(grid_unq_t, float)
             for rd in _parse_list(grid_red, float)
             for ur in _parse_list(grid_unq_r, float)
             for sy in _parse_list(grid_syn, float)]
    out_dir, manifest = _start_run("landscape", cfg, out, force)
    try:
        rows = goal_landscape(
            cfg.train_config(), goals, cfg.pattern_source(), cfg.network.N,
            cfg.run.seeds, jobs=cfg.run.jobs, alpha_step=alpha_step,
            alpha_max=alpha_max, theta=cfg.testing.theta, max_iter=cfg.testing.N_iter)
        manifest.add_artifact(write_csv(
            out_dir / "landscape.csv",
            ("g_unq_R", "g_unq_T", "g_red", "g_syn", "g_res",
             "alpha_c_median", "ci_lo", "ci_hi"), rows))
        if render_plots:
            manifest.add_artifact(plots.render_landscape(rows, out_dir / "landscape.png"))
        manifest.finish("ok")
    except BaseException as exc:
        manifest.finish("failed", error=repr(exc))
        raise
    click.echo(f"landscape over {len(goals)} goals -> {out_dir}")


@cli.command()
@config_option
@click.option("--n", type=int, default=None)
@click.option("--budget", type=int, default=80, show_default=True,
              help="Total capacity evaluations for the search.")
@click.option("--popsize", type=int, default=None)
@click.option("--train-seed", type=int, default=0, show_default=True)
@click.option("--validate-seeds", default="", help="Held-out seeds for the winner.")
@click.option("--box-lo", type=float, default=-1.0, show_default=True)
@click.option("--box-hi", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--alpha-step", type=float, default=0.02)
@click.option("--alpha-max", type=float, default=2.0)
@jobs_option
@out_option
@force_option
def optimize(config_path, n, budget, popsize, train_seed, validate_seeds, box_lo,
             box_hi, seed, alpha_step, alpha_max, jobs, out, force):
    """Search goal coefficients that maximize capacity (CMA-ES)."""
    cfg = _resolve_config(config_path, method="infomorphic", n=n, jobs=jobs)
    holdout = _parse_list(validate_seeds, int) if validate_seeds else []
    out_dir, manifest = _start_run("optimize", cfg, out, force)
    try:
        best, validated, trace = optimize_goal(
            cfg.train_config(), cfg.pattern_source(), cfg.network.N,
            (np.full(5, box_lo), np.full(5, box_hi)), budget, seed=seed,
            train_seed=train_seed, validate_seeds=holdout, popsize=popsize,
            jobs=cfg.run.jobs, alpha_step=alpha_step, alpha_max=alpha_max,
            theta=cfg.testing.theta, max_iter=cfg.testing.N_iter)
        manifest.add_artifact(write_csv(
            out_dir / "evaluations.csv",
            ("evaluation", "g_unq_R", "g_unq_T", "g_red", "g_syn", "g_res", "alpha_c"),
            trace))
        best_row = {
            "g_unq_R": best.unq_r, "g_unq_T": best.unq_t, "g_red": best.red,
            "g_syn": best.syn, "g_res": best.res,
            "alpha_c_median": validated.alpha_c if validated else max(t["alpha_c"] for t in trace),
            "ci_lo": validated.ci95[0] if validated else "",
            "ci_hi": validated.ci95[1] if validated else "",
        }
        manifest.add_artifact(write_csv(
            out_dir / "best.csv",
            ("g_unq_R", "g_unq_T", "g_red", "g_syn", "g_res",
             "alpha_c_median", "ci_lo", "ci_hi"), [best_row]))
        manifest.finish("ok")
    except BaseException as exc:
        manifest.finish("failed", error=repr(exc))
        raise
    click.echo(f"best goal {tuple(round(v, 4) for v in best)} -> {out_dir}")


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except (ParameterError, DimensionError, NormalizationError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except NumericDomainError as exc:
        click.echo(f"numeric error: {exc}", err=True)
        return 2
    except InfohopError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except Exception as exc:  # anything unexpected is a runtime failure
        click.echo(f"error: {exc!r}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
