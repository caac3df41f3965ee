"""Figures written next to the CSV output. Uses the Agg backend only."""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MODE_STYLE = {"OCSI": "o-", "LPCSI": "s--", "GPCSI": "^-", "MAXTHROUGHPUT": "x:"}


def _save(fig, outdir, name):
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_topology(topology, tree, outdir, name="topology.png"):
    fig, ax = plt.subplots(figsize=(5, 5))
    xy = topology.positions
    for link in tree.links:
        a, b = xy[link.tx], xy[link.rx]
        ax.annotate("", xy=b, xytext=a,
                    arrowprops=dict(arrowstyle="->", lw=0.8, color="0.4"))
    ax.plot(xy[:, 0], xy[:, 1], "o", ms=4, color="tab:blue")
    s = topology.source_index
    ax.plot(*xy[s], "s", ms=8, color="tab:red", label="source")
    ax.set_xlim(0, topology.area_side)
    ax.set_ylim(0, topology.area_side)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="upper right", fontsize=8)
    return _save(fig, outdir, name)


def _groups(rows):
    out = {}
    for r in rows:
        out.setdefault((r["M"], r["gamma"]), []).append(r)
    return out


def plot_sweep(rows, outdir):
    """One connectivity and one power figure per (M, gamma); returns file paths."""
    paths = []
    for (M, gamma), grp in sorted(_groups(rows).items()):
        modes = sorted({r["mode"] for r in grp})
        fig_c, ax_c = plt.subplots(figsize=(5.5, 4))
        fig_p, ax_p = plt.subplots(figsize=(5.5, 4))
        ns = sorted({r["N_s"] for r in grp})
        ub = [next(r["U_B"] for r in grp if r["N_s"] == n) for n in ns]
        pb = [next(r["P_B"] for r in grp if r["N_s"] == n) for n in ns]
        ax_c.plot(ns, ub, "k-", lw=1.5, label="upper bound")
        if np.all(np.isfinite(pb)):
            ax_p.plot(ns, pb, "k-", lw=1.5, label="lower bound")
        for mode in modes:
            sel = sorted((r for r in grp if r["mode"] == mode), key=lambda r: r["N_s"])
            x = [r["N_s"] for r in sel]
            ax_c.plot(x, [r["connectivity_product"] for r in sel],
                      MODE_STYLE.get(mode, "o-"), label=mode)
            ax_p.plot(x, [r["avg_sum_power"] for r in sel],
                      MODE_STYLE.get(mode, "o-"), label=mode)
        ax_c.set_ylim(-0.02, 1.02)
        ax_c.set_ylabel("connectivity")
        ax_p.set_ylabel("average sum power per slot")
        for ax in (ax_c, ax_p):
            ax.set_xlabel("number of slots $N_s$")
            ax.set_title(f"M={M}, $\\gamma$={gamma:g}")
            ax.grid(alpha=0.3)
            ax.legend(fontsize=8)
        tag = f"M{M}_g{gamma:g}"
        paths.append(_save(fig_c, outdir, f"connectivity_{tag}.png"))
        paths.append(_save(fig_p, outdir, f"power_{tag}.png"))
    return paths


def plot_bound_curves(x, columns, xlabel, outdir, name="bounds.png", logy=()):
    """``columns`` maps a label to a y array; labels in ``logy`` go to a log axis."""
    lin = {k: v for k, v in columns.items() if k not in logy}
    log_ = {k: v for k, v in columns.items() if k in logy}
    n = 1 + bool(log_) if lin else 1
    fig, axes = plt.subplots(1, n, figsize=(5 * n, 4), squeeze=False)
    ax = axes[0, 0]
    for k, v in (lin or log_).items():
        ax.plot(x, v, label=k)
    if not lin:
        ax.set_yscale("log")
    if lin and log_:
        ax2 = axes[0, 1]
        for k, v in log_.items():
            ax2.plot(x, v, label=k)
        ax2.set_yscale("log")
    for a in axes.ravel():
        a.set_xlabel(xlabel)
        a.grid(alpha=0.3)
        a.legend(fontsize=8)
    return _save(fig, outdir, name)
