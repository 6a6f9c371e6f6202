"""Figures for the ``reproduce`` reports.  Always renders off-screen."""

from __future__ import annotations

import math
import os
from typing import Dict, List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analysis import harmonic  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.figsize": (4.5, 3.2),
    "savefig.dpi": 150,
    # fixed metadata keeps repeated renders byte-identical
    "svg.hashsalt": "pathrev",
}


def _save(fig, outdir: str, name: str) -> str:
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, name)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None} if path.endswith(".png") else None)
    plt.close(fig)
    return path


def theorem31_figure(rows: List[dict], hist: Dict[int, int], n_hist: int, outdir: str) -> List[str]:
    paths = []
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ns = [r["n"] for r in rows]
        grid = list(range(2, max(ns) + 1))
        ax.plot(grid, [float(harmonic(n - 1).h) for n in grid], "k-", lw=1,
                label=r"$H_{n-1}$")
        ax.errorbar(ns, [r["mean_messages"] for r in rows],
                    yerr=[3 * r["se_messages"] for r in rows], fmt="o", ms=3,
                    color="C0", capsize=2, label="simulated (±3 s.e.)")
        ax.plot(ns, [r["mean_request_messages"] for r in rows], "s", ms=3,
                color="C1", label="forwarded requests only")
        ax.set_xlabel("sites n")
        ax.set_ylabel("messages per CS entry")
        ax.legend(frameon=False)
        paths.append(_save(fig, outdir, "theorem31_mean_messages.png"))

        fig, ax = plt.subplots()
        total = sum(hist.values())
        ks = sorted(hist)
        ax.bar(ks, [hist[k] / total for k in ks], color="C0", width=0.8)
        mean = sum(k * v for k, v in hist.items()) / total
        ax.axvline(float(harmonic(n_hist - 1).h), color="k", lw=1, ls="--",
                   label=r"$H_{n-1}$")
        ax.axvline(mean, color="C1", lw=1, label="sample mean")
        ax.set_xlabel(f"messages per CS entry (n = {n_hist})")
        ax.set_ylabel("frequency")
        ax.legend(frameon=False)
        paths.append(_save(fig, outdir, "theorem31_histogram.png"))
    return paths


def theorem41_figure(rows: List[dict], outdir: str) -> List[str]:
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        rhos = sorted({r["rho"] for r in rows})
        for i, rho in enumerate(rhos):
            sub = sorted((r for r in rows if r["rho"] == rho), key=lambda r: r["n"])
            ns = [r["n"] for r in sub]
            ax.plot(ns, [r["wbar"] for r in sub], "-", color=f"C{i}", lw=1,
                    label=rf"$\bar w$, $\rho$={rho:g}")
            if sub[0]["bound"] is not None:
                ax.plot(ns, [r["bound"] for r in sub], "--", color=f"C{i}", lw=1)
            if "sim_mean_wait" in sub[0]:
                ax.plot(ns, [r["sim_mean_wait"] for r in sub], "o", ms=3, color=f"C{i}")
        ax.set_xlabel("sites n")
        ax.set_ylabel("expected waiting time")
        ax.set_title("solid: exact, dashed: large-n bound", fontsize=8)
        ax.legend(frameon=False)
        return [_save(fig, outdir, "theorem41_waiting.png")]


def lemma51_figure(rows: List[dict], fit: dict, outdir: str) -> List[str]:
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for i, (fam, f) in enumerate(sorted(fit.items())):
            sub = [r for r in rows if r["family"] == fam]
            ax.plot([r["n"] for r in sub], [r["max_hops"] for r in sub], ".", alpha=0.4,
                    color=f"C{i}")
            ax.plot([r["n"] for r in sub], [r["two_d"] for r in sub], "x", ms=3,
                    color=f"C{i}", alpha=0.6)
            grid = sorted(set(f["n"]))
            ax.plot(grid, [f["c_log"] * math.log(n) for n in grid], "-", color=f"C{i}",
                    lw=1, label=f"{fam}: {f['c_log']:.2f} ln n")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("sites n")
        ax.set_ylabel("hop-messages per request")
        ax.set_title("dots: max per run, x: 2D", fontsize=8)
        ax.legend(frameon=False)
        return [_save(fig, outdir, "lemma51_hops.png")]
