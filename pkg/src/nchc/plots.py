"""Figure rendering for run outputs.

Each experiment's results CSV maps to one PNG written next to it (or into
a chosen directory). Replica reference curves draw as solid lines and
numeric reference points as hollow markers, with our simulated values as
filled markers, so agreement is visible at a glance. Rendering is opt-in
from the CLI; the CSV stays the canonical result format.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import load_results
from .reference import load_reference

__all__ = ["render_results"]

_MARKERS = ["o", "s", "^", "d", "v", "*"]


def render_results(results: str | Path, out_dir: str | Path, reference: str | None = None) -> list[Path]:
    """Render the figure for a results CSV; returns written paths."""
    rows = load_results(results)
    if not rows:
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    experiment = rows[0]["experiment"]
    if experiment in ("dh_mean", "ch_variance"):
        return [_plot_distance_sweep(rows, out_dir, experiment, reference)]
    if experiment == "accuracy_sweep":
        return [_plot_accuracy(rows, out_dir, reference)]
    if experiment == "heatmap":
        return [_plot_heatmap(rows, out_dir)]
    if experiment == "hciz_verify":
        return [_plot_hciz(rows, out_dir)]
    if experiment == "geometry_check":
        return [_plot_geometry(rows, out_dir)]
    return []


def _group_by_mn(rows):
    groups = defaultdict(list)
    for row in rows:
        groups[(row["M"], row["N"])].append(row)
    return groups


def _reference_curves(source, M, alpha):
    table = load_reference(source)
    pts = sorted(
        (r.key, r.value) for r in table.rows if r.M == M and abs(r.alpha - alpha) < 1e-9
    )
    if not pts:
        return None
    return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


def _plot_distance_sweep(rows, out_dir, experiment, reference):
    value_col = "mean_daa_over_M" if experiment == "dh_mean" else "var_dab_over_M"
    ylabel = "mean of D_dh / M" if experiment == "dh_mean" else "Var(D_ch / M)"
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for i, ((M, N), grp) in enumerate(sorted(_group_by_mn(rows).items())):
        grp = sorted(grp, key=lambda r: r["sigma2"])
        x = [r["sigma2"] for r in grp]
        y = [r[value_col] for r in grp]
        marker = _MARKERS[i % len(_MARKERS)]
        ax.plot(x, y, marker + "-", ms=5, label=f"simulated M={M}, N={N}")
        if reference:
            ref = _reference_curves(reference, M, M / N)
            if ref is not None:
                style = "k--" if reference.endswith("replica") else "k" + marker
                ax.plot(ref[0], ref[1], style, lw=1.0, mfc="none", ms=7,
                        label=f"{reference} M={M}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(r"$\sigma^2$")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / f"{experiment}.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _plot_accuracy(rows, out_dir, reference):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for i, ((M, N), grp) in enumerate(sorted(_group_by_mn(rows).items())):
        grp = sorted(grp, key=lambda r: 1.0 / r["sigma2"])
        x = [1.0 / r["sigma2"] for r in grp]
        y = [r["misclass_rate"] for r in grp]
        yerr = [
            (r["misclass_rate"] - r["misclass_ci_lo"], r["misclass_ci_hi"] - r["misclass_rate"])
            for r in grp
        ]
        marker = _MARKERS[i % len(_MARKERS)]
        ax.errorbar(
            x, y, yerr=np.array(yerr).T, fmt=marker, ms=5, capsize=2,
            label=f"simulated M={M}, N={N}",
        )
        ax.plot(x, [r["predicted_misclass"] for r in grp], "-",
                lw=1.0, label=f"moment-matched M={M}, N={N}")
        if reference:
            ref = _reference_curves(reference, M, M / N)
            if ref is not None:
                style = "k--" if reference.endswith("replica") else "kx"
                ax.plot(ref[0], ref[1], style, lw=1.0, ms=7, label=f"{reference} M={M}")
    ax.set_xscale("log")
    ax.set_xlabel(r"$1/\sigma^2$")
    ax.set_ylabel("misclassification rate")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "accuracy_sweep.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _plot_heatmap(rows, out_dir):
    ms = sorted({r["M"] for r in rows})
    ns = sorted({r["N"] for r in rows})
    grid = np.full((len(ms), len(ns)), np.nan)
    for r in rows:
        grid[ms.index(r["M"]), ns.index(r["N"])] = r["misclass_rate"]
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(ns)), [str(n) for n in ns])
    ax.set_yticks(range(len(ms)), [str(m) for m in ms])
    ax.set_xlabel("N")
    ax.set_ylabel("M")
    sigma2 = rows[0]["sigma2"]
    ax.set_title(rf"misclassification rate at $\sigma^2={sigma2:g}$")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    path = out_dir / "heatmap.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _plot_hciz(rows, out_dir):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    by_ct = defaultdict(list)
    for r in rows:
        by_ct[r["ctheta"]].append(r)
    for i, (ct, grp) in enumerate(sorted(by_ct.items())):
        grp = sorted(grp, key=lambda r: r["N"])
        x = [r["N"] for r in grp]
        marker = _MARKERS[i % len(_MARKERS)]
        ax.errorbar(x, [r["mc_rate"] for r in grp], yerr=[3 * r["mc_se"] for r in grp],
                    fmt=marker, ms=5, capsize=2, label=rf"MC $\pm 3$SE, $c\theta={ct:g}$")
        ax.plot(x, [r["prediction"] for r in grp], "--", lw=1.0,
                label=rf"R-transform rate, $c\theta={ct:g}$")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("N")
    ax.set_ylabel("spherical integral rate (1/N) log I")
    ensemble = rows[0]["ensemble"]
    ax.set_title(f"ensemble: {ensemble}")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "hciz_verify.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _plot_geometry(rows, out_dir):
    fig, axes = plt.subplots(1, 2, figsize=(8.4, 3.6))
    rows = sorted(rows, key=lambda r: r["M"])
    x = [r["M"] for r in rows]
    axes[0].plot(x, [r["norm_concentration"] for r in rows], "o-", label="max col norm dev")
    axes[0].plot(x, [r["ks_quarter_circle"] for r in rows], "s-", label="KS quarter circle")
    axes[0].plot(x, [r["ks_mp_eigen"] for r in rows], "^-", label="KS MP eigen")
    axes[0].set_xlabel("M")
    axes[0].set_ylabel("statistic")
    axes[0].set_xscale("log")
    axes[0].set_yscale("log")
    axes[0].grid(True, which="both", alpha=0.3)
    axes[0].legend(fontsize=8)
    axes[1].plot(x, [r["belt_mean"] for r in rows], "o-", label=r"mean $\|\sigma n\|/\sqrt{M}$")
    axes[1].plot(x, [r["belt_target_sigma"] for r in rows], "k--", label=r"$\sigma$")
    axes[1].set_xlabel("M")
    axes[1].set_xscale("log")
    axes[1].grid(True, which="both", alpha=0.3)
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "geometry_check.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
