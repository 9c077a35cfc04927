"""Figure rendering for the experiment report path.

Each renderer takes the rows of one result table and writes a PNG next to
it. Matplotlib is imported lazily with the Agg backend so headless runs
and workers never touch a display.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

ATOM_STYLE = [
    ("unq_R", "tab:blue", "unique (recurrent)"),
    ("unq_T", "tab:cyan", "unique (target)"),
    ("red", "tab:red", "redundant"),
    ("syn", "tab:green", "synergistic"),
    ("res", "tab:gray", "residual"),
]


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _median_band(rows, x_key, y_key):
    """Per-x median and 5th/95th percentiles of y across seeds."""
    xs = sorted({float(r[x_key]) for r in rows})
    med, lo, hi = [], [], []
    for x in xs:
        ys = [float(r[y_key]) for r in rows if float(r[x_key]) == x]
        med.append(np.median(ys))
        lo.append(np.percentile(ys, 5))
        hi.append(np.percentile(ys, 95))
    return np.asarray(xs), np.asarray(med), np.asarray(lo), np.asarray(hi)


def render_telemetry(rows, path) -> Path:
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4), sharex=True)
    epochs = [int(r["epoch"]) for r in rows]
    for key, color, label in ATOM_STYLE:
        ax1.plot(epochs, [float(r[key]) for r in rows], color=color, label=label, lw=1)
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("mean atom [bits]")
    ax1.legend(fontsize=7)
    ax2.plot(epochs, [float(r["goal"]) for r in rows], color="black", lw=1)
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("mean goal")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_capacity(scan_rows, per_seed, ci95, path) -> Path:
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    xs, med, lo, hi = _median_band(scan_rows, "alpha", "a_cos")
    ax1.fill_between(xs, lo, hi, alpha=0.25, color="tab:blue")
    ax1.plot(xs, med, color="tab:blue", marker=".")
    ax1.axhline(0.95, color="gray", ls=":", lw=1)
    ax1.set_xlabel("memory load")
    ax1.set_ylabel("recall accuracy (cosine)")
    ax2.plot(np.arange(len(per_seed)), sorted(per_seed), "o", color="tab:red")
    ax2.axhline(float(np.median(per_seed)), color="black", lw=1, label="median")
    ax2.axhspan(ci95[0], ci95[1], color="tab:red", alpha=0.15, label="95% CI")
    ax2.set_xlabel("seed (sorted)")
    ax2.set_ylabel("capacity")
    ax2.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_profile(rows, path) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    for key, color, label in ATOM_STYLE:
        xs, med, lo, hi = _median_band(rows, "alpha", key)
        ax.fill_between(xs, lo, hi, alpha=0.2, color=color)
        ax.plot(xs, med, color=color, label=label, lw=1.2)
    xs, med, _, _ = _median_band(rows, "alpha", "a_cos")
    ax.plot(xs, med, color="black", ls="--", lw=1.2, label="accuracy")
    ax.set_xlabel("memory load")
    ax.set_ylabel("bits / accuracy")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_stability(rows, path) -> Path:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    xs, med, lo, hi = _median_band(rows, "alpha", "f_max")
    ax.fill_between(xs, lo, hi, alpha=0.25, color="tab:purple")
    ax.plot(xs, med, color="tab:purple", marker=".")
    ax.set_xlabel("memory load")
    ax.set_ylabel("max recoverable flip fraction")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_landscape(rows, path) -> Path:
    plt = _plt()
    outers = sorted({(float(r["g_unq_T"]), float(r["g_red"])) for r in rows})
    ncols = min(len(outers), 4)
    nrows = (len(outers) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(3.2 * ncols, 2.8 * nrows),
                             squeeze=False)
    for k, (g_t, g_r) in enumerate(outers):
        ax = axes[k // ncols][k % ncols]
        sub = [r for r in rows
               if float(r["g_unq_T"]) == g_t and float(r["g_red"]) == g_r]
        xs = sorted({float(r["g_unq_R"]) for r in sub})
        ys = sorted({float(r["g_syn"]) for r in sub})
        grid = np.full((len(ys), len(xs)), np.nan)
        for r in sub:
            grid[ys.index(float(r["g_syn"])), xs.index(float(r["g_unq_R"]))] = \
                float(r["alpha_c_median"])
        im = ax.imshow(grid, origin="lower", aspect="auto",
                       extent=(min(xs), max(xs), min(ys), max(ys)) if len(xs) > 1 else None)
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.set_title(f"unq_T={g_t:g}, red={g_r:g}", fontsize=8)
        ax.set_xlabel("unq_R coeff")
        ax.set_ylabel("syn coeff")
    for k in range(len(outers), nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
