"""Release acceptance criteria.

Each test exercises one numbered criterion at its stated tolerance and
prints one PASS line (run with -s to see them live). The two large-scale
reproduction checks marked `extended` take hours and are deselected by
default; run them with `pytest -m extended`.
"""

import time

import numpy as np
import pytest

import infohop.autodiff as ad
from infohop import seeds
from infohop.binning import BinningConfig, fit_grid, kernel_widths, soft_histogram
from infohop.cli import main as cli_main
from infohop.cmaes import CMAES
from infohop.harness import (PatternSource, Trainer, accuracy_threshold,
                             estimate_capacity, pid_profile, pmap)
from infohop.infomorphic import NeuronSamples, TrainConfig, estimate_joint
from infohop.patterns import gen_iid_patterns
from infohop.pid import (ANTICHAINS, BOTH_SOURCES, GoalWeights, entropy,
                         goal_value, isx_redundancy, mutual_information,
                         pid_atoms)

from test_binning import hard_histogram
from test_pid import copy_joint, oracle_isx, xor_joint

pytestmark = pytest.mark.acceptance

JOBS = 2
IID = PatternSource("iid")
TABLE_DEFAULTS = dict(epochs=5000, eta=0.05, lambda_r=1e-3, target_weight=2.3,
                      binning=BinningConfig())  # n_r=60, n_t=2, sigmas, padding=1


def report(criterion: int, detail: str, t0: float) -> None:
    print(f"\n[criterion {criterion:2d}] PASS: {detail} ({time.perf_counter() - t0:.1f}s)")


# -- 1: PID correctness, property-based --------------------------------------

def test_criterion_01_pid_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    joints = rng.random((1000, 2, 8, 2))
    joints /= joints.sum(axis=(1, 2, 3), keepdims=True)

    atoms = pid_atoms(joints)
    mi_r = mutual_information(joints, "r")
    mi_t = mutual_information(joints, "t")
    mi_rt = mutual_information(joints, "rt")
    h_y = entropy(joints.sum(axis=(2, 3)))

    assert np.max(np.abs(atoms.unq_r + atoms.red - mi_r)) < 1e-10
    assert np.max(np.abs(atoms.unq_t + atoms.red - mi_t)) < 1e-10
    four = atoms.unq_r + atoms.unq_t + atoms.red + atoms.syn
    assert np.max(np.abs(four - mi_rt)) < 1e-10
    assert np.max(np.abs(four + atoms.res - h_y)) < 1e-10
    # Self-redundancy: singleton antichains equal the matching MI.
    assert np.max(np.abs(isx_redundancy(joints, (("r",),)) - mi_r)) < 1e-10
    assert np.max(np.abs(isx_redundancy(joints, (("t",),)) - mi_t)) < 1e-10
    # Source symmetry under swapping the R and T axes.
    swapped = pid_atoms(np.swapaxes(joints, 2, 3))
    assert np.max(np.abs(atoms.unq_r - swapped.unq_t)) < 1e-10
    assert np.max(np.abs(atoms.unq_t - swapped.unq_r)) < 1e-10
    for name in ("red", "syn", "res"):
        assert np.max(np.abs(np.asarray(getattr(atoms, name))
                             - np.asarray(getattr(swapped, name)))) < 1e-10
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    report(1, "consistency, entropy split, self-redundancy, symmetry on 1000 joints @1e-10", t0)


# -- 2: shared-exclusions oracle equivalence ---------------------------------

def test_criterion_02_isx_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    for k in range(100):
        shape = (2, int(rng.integers(2, 5)), int(rng.integers(2, 4)))
        j = rng.random(shape)
        if k % 2:
            j[rng.random(shape) < 0.25] = 0.0
            j.flat[int(rng.integers(j.size))] += 0.5
        j /= j.sum()
        beta = ANTICHAINS[k % 4]
        assert abs(float(isx_redundancy(j, beta)) - oracle_isx(j, beta)) < 1e-12
    assert float(isx_redundancy(copy_joint(), BOTH_SOURCES)) == pytest.approx(1.0, abs=1e-12)
    assert float(isx_redundancy(xor_joint(), BOTH_SOURCES)) == pytest.approx(
        np.log2(2.0 / 3.0), abs=1e-12)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    report(2, "event-enumeration oracle on 100 joints @1e-12; copy=1, xor=log2(2/3)", t0)


# -- 3: gradient correctness --------------------------------------------------

def test_criterion_03_gradients_match_finite_differences():
    t0 = time.perf_counter()
    bins = BinningConfig(n_r=8, n_t=2)
    goals = [GoalWeights(**{name: 1.0})
             for name in ("unq_r", "unq_t", "red", "syn", "res")]
    goals.append(GoalWeights(red=1.0))  # the redundancy training goal
    worst = 0.0
    for (n, m, seed) in [(5, 6, 31), (6, 8, 32)]:
        pats = gen_iid_patterns(m, n, seed)
        w_t = np.full(n, 2.3)
        rng = np.random.default_rng(seed + 1)
        for i in (0, n - 1):
            row0 = rng.normal(0.0, 0.3, n)
            mask = np.ones(n)
            mask[i] = 0.0
            for gw in goals:
                def objective(row):
                    r = ad.matmul(pats, ad.mul(row, mask))
                    tt = w_t[i] * pats[:, i]
                    cond = ad.sigmoid(ad.add(r, tt))
                    joint = estimate_joint(NeuronSamples(r, tt, cond), bins)
                    return goal_value(pid_atoms(joint), gw)

                err = ad.finite_diff_check(objective, row0, h=1e-6)
                worst = max(worst, err)
                assert err < 1e-4, f"N={n} m={m} neuron={i} goal={gw}: {err}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    report(3, f"five unit goals + redundancy goal, max rel err {worst:.2e} < 1e-4", t0)


# -- 4: soft-binning limit ----------------------------------------------------

def test_criterion_04_soft_binning_limits():
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    for scale in ("axis", "diagonal"):
        cfg = BinningConfig(n_r=9, n_t=4, sigma_r=1e-8, sigma_t=1e-8,
                            width_scale=scale)
        rs = rng.uniform(-1, 1, 300)
        ts = rng.uniform(0, 5, 300)
        grid = fit_grid(rs, ts, cfg)
        for arr, lo, c in ((rs, grid.r_lo, grid.c_r), (ts, grid.t_lo, grid.c_t)):
            pos = (arr - float(lo)) / float(c)
            off = pos - np.round(pos)
            arr[np.abs(off) < 1e-4] += 2e-4 * float(c)
        soft = soft_histogram(rs, ts, grid, cfg)
        hard = hard_histogram(rs, ts, grid, cfg)
        assert np.max(np.abs(soft - hard)) < 1e-6
    # Per-sample weight normalization across width regimes.
    from infohop.binning import axis_weights

    for sigma in (1e-8, 1e-3, 0.5, 2.0):
        for scale in ("axis", "diagonal"):
            cfg = BinningConfig(n_r=7, n_t=3, sigma_r=sigma, sigma_t=sigma,
                                width_scale=scale)
            rs = rng.normal(size=100)
            ts = rng.normal(size=100)
            grid = fit_grid(rs, ts, cfg)
            ell_r, ell_t = kernel_widths(grid, cfg)
            wr = ad.value_of(axis_weights(rs, grid.r_lo, grid.c_r, cfg.n_r, ell_r))
            wt = ad.value_of(axis_weights(ts, grid.t_lo, grid.c_t, cfg.n_t, ell_t))
            assert np.allclose(np.einsum("mi,mj->m", wr, wt), 1.0, atol=1e-12)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    report(4, "hard-histogram limit @1e-6 per cell; per-sample normalization @1e-12", t0)


# -- 5: Hebbian capacity -------------------------------------------------------

def test_criterion_05_hebbian_capacity():
    t0 = time.perf_counter()
    result = estimate_capacity(Trainer("hebbian"), IID, 500, [0, 1, 2, 3, 4],
                               alpha_step=0.02, alpha_max=0.24, jobs=JOBS)
    assert 0.10 <= result.alpha_c <= 0.17, result.per_seed
    top = max(r["alpha"] for r in result.rows)
    a_theta_top = np.median([r["a_theta"] for r in result.rows if r["alpha"] == top])
    assert a_theta_top <= 0.05
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    report(5, f"alpha_c={result.alpha_c:.3f} in [0.10, 0.17]; "
              f"a_theta({top:.2f})={a_theta_top:.3f} collapses", t0)


# -- 6: Hebbian PID profile ----------------------------------------------------

def test_criterion_06_hebbian_pid_profile():
    t0 = time.perf_counter()
    rows = pid_profile(Trainer("hebbian"), IID, 500, [0.1, 0.5], [0, 1, 2],
                       BinningConfig(), jobs=JOBS)
    def med(alpha, key):
        return float(np.median([r[key] for r in rows if r["alpha"] == alpha]))

    below = {k: med(0.1, k) for k in ("unq_R", "unq_T", "red", "syn")}
    assert below["red"] > max(below["unq_R"], below["unq_T"], below["syn"])
    assert med(0.5, "red") < below["red"]
    assert med(0.5, "unq_R") > below["unq_R"]
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    report(6, f"red dominates at load 0.1 ({below['red']:.3f}); at 0.5 red falls to "
              f"{med(0.5, 'red'):.3f} and unq_R rises to {med(0.5, 'unq_R'):.3f}", t0)


# -- 7 and 8: goal-trained networks at full scale ------------------------------

def _train_and_score(args):
    goal, seed = args
    cfg = TrainConfig(goal=goal, **TABLE_DEFAULTS)
    pats = gen_iid_patterns(100, 100, seeds.stream(seed, "patterns", 100))
    w = Trainer("infomorphic", cfg).train(pats, seed)
    return accuracy_threshold(w, pats, theta=0.95)


def test_criterion_07_redundancy_goal_end_to_end():
    t0 = time.perf_counter()
    scores = pmap(_train_and_score,
                  [(GoalWeights(red=1.0), s) for s in (0, 1, 2)], jobs=JOBS)
    passed = sum(s >= 0.95 for s in scores)
    assert passed >= 2, scores
    report(7, f"redundancy goal at load 1.0: a_theta per seed {np.round(scores, 3)}"
              f" ({passed}/3 seeds >= 0.95)", t0)


def test_criterion_08_goal_equivalence_and_co_information():
    t0 = time.perf_counter()
    mi_goal = GoalWeights(unq_t=1.0, red=1.0)          # I(Y:T)
    coinfo_goal = GoalWeights(red=1.0, syn=-1.0)       # redundancy minus synergy
    scores = pmap(_train_and_score, [(mi_goal, 0), (coinfo_goal, 0)], jobs=JOBS)
    assert scores[0] >= 0.95, f"target-information goal failed: {scores[0]}"
    assert scores[1] <= 0.05, f"co-information goal unexpectedly stored patterns: {scores[1]}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 3600.0
    report(8, f"target-information goal a_theta={scores[0]:.3f} >= 0.95; "
              f"co-information goal a_theta={scores[1]:.3f} <= 0.05", t0)


# -- 9: finite-size formula -----------------------------------------------------

def test_criterion_09_constant_neuron_formula():
    t0 = time.perf_counter()
    rng = np.random.default_rng(909)
    for (n, m) in [(10, 1), (10, 3), (20, 4)]:
        pats = rng.integers(0, 2, size=(10000, m, n))
        counts = np.sum(np.all(pats == pats[:, :1, :], axis=1), axis=1)
        got = counts.mean()
        expected = n / 2.0 ** (m - 1)
        stderr = counts.std(ddof=1) / np.sqrt(counts.shape[0])
        assert abs(got - expected) <= 3.0 * max(stderr, 1e-12), (n, m, got, expected)
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0
    report(9, "Monte Carlo constant-neuron counts within 3 standard errors", t0)


# -- 10: determinism across reruns and jobs --------------------------------------

def test_criterion_10_manifest_rerun_byte_identical(tmp_path):
    t0 = time.perf_counter()
    first = tmp_path / "a"
    code = cli_main(["capacity", "--method", "hebbian", "--n", "48",
                     "--seeds", "0,1,2", "--alpha-step", "0.05", "--alpha-max",
                     "0.3", "--jobs", "1", "--out", str(first), "--no-plots"])
    assert code == 0
    second = tmp_path / "b"
    code = cli_main(["capacity", "--config", str(first / "config.yaml"),
                     "--jobs", "2", "--alpha-step", "0.05", "--alpha-max", "0.3",
                     "--out", str(second), "--no-plots"])
    assert code == 0
    for name in ("capacity.csv", "capacity_scan.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name
    report(10, "rerun from config snapshot with different --jobs: tables byte-identical", t0)


# -- 11: goal search sanity -------------------------------------------------------

def test_criterion_11_cmaes_negated_sphere():
    t0 = time.perf_counter()
    # Maximize g(x) = -|x|^2 from a far start; the strategy minimizes, so it
    # receives -g as the fitness.
    es = CMAES(np.full(5, 3.0), 1.0, seed=11)
    while es.evaluations + es.lam <= 5000:
        xs = es.ask()
        es.tell(xs, [float(np.sum(x * x)) for x in xs])
    assert np.linalg.norm(es.best_x) < 1e-3
    report(11, f"negated 5-D sphere optimum |x|={np.linalg.norm(es.best_x):.2e} "
               f"< 1e-3 within {es.evaluations} evaluations", t0)


# -- extended, non-gating reproductions -------------------------------------------

def _capacity_on_coarse_grid(goal, seed, loads):
    """First failing load on an explicit grid (all smaller loads assumed
    passing, which the gating criterion 7 already established at 1.0)."""
    from infohop.harness import accuracy_cos

    cfg = TrainConfig(goal=goal, **TABLE_DEFAULTS)
    trainer = Trainer("infomorphic", cfg)
    for alpha in loads:
        m = int(round(alpha * 100))
        pats = gen_iid_patterns(m, 100, seeds.stream(seed, "patterns", m))
        w = trainer.train(pats, seed)
        if accuracy_cos(w, pats) <= 0.95:
            return alpha
    return loads[-1] + 0.05


def _coarse_cell(args):
    goal, seed, loads = args
    return _capacity_on_coarse_grid(goal, seed, loads)


@pytest.mark.extended
def test_extended_infomorphic_capacity_near_published_value():
    t0 = time.perf_counter()
    loads = [1.45, 1.50, 1.55, 1.60, 1.65, 1.70]
    caps = pmap(_coarse_cell, [(GoalWeights(red=1.0), s, loads) for s in (0, 1, 2)],
                jobs=JOBS)
    alpha_c = float(np.median(caps))
    assert 1.45 <= alpha_c <= 1.70, caps
    report(7, f"extended: redundancy-goal capacity {alpha_c:.2f} in [1.45, 1.70] "
              f"(per seed {caps})", t0)


@pytest.mark.extended
def test_extended_published_composite_goal_capacity():
    t0 = time.perf_counter()
    loads = [1.45, 1.50, 1.55, 1.60, 1.65, 1.70, 1.75]
    # Composite coefficients in (unq_T, unq_R, red, syn, res) published order:
    # (0.48, -0.16, 0.25, 0.04, -0.63).
    composite = GoalWeights(unq_r=-0.16, unq_t=0.48, red=0.25, syn=0.04, res=-0.63)
    jobs_args = [(g, s, loads) for g in (composite, GoalWeights(red=1.0))
                 for s in (0, 1, 2)]
    caps = pmap(_coarse_cell, jobs_args, jobs=JOBS)
    cap_composite = float(np.median(caps[:3]))
    cap_red = float(np.median(caps[3:]))
    assert cap_composite >= cap_red - 0.05, (caps[:3], caps[3:])
    report(11, f"extended: composite goal capacity {cap_composite:.2f} vs "
               f"redundancy {cap_red:.2f} (within 0.05)", t0)
