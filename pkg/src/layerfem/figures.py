"""Figure rendering for solutions and convergence tables.

Rendering is file-only (Agg backend, selected before pyplot loads) so the
CLI can emit figures from headless runs.  Every function writes the file it
is given and returns the path; nothing is shown interactively.
"""
from __future__ import annotations

import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .study import SweepTable


def convergence_figure(table: SweepTable, path: str, title: str | None = None) -> str:
    """Log-log error vs H, one line per eps, with slope guide lines.

    Flagged cells render as hollow markers: their values are plotted so the
    degradation pattern stays visible, but the marker says the harness does
    not trust them.
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    finite = []
    for eps in table.eps_list:
        Hs, errs, ok = [], [], []
        for H in table.H_list:
            r = table.result(eps, H)
            if r is None or not math.isfinite(r.err_total) or r.err_total <= 0:
                continue
            Hs.append(H)
            errs.append(r.err_total)
            ok.append(not r.flagged)
        if not Hs:
            continue
        finite += errs
        (line,) = ax.loglog(Hs, errs, "-", label=f"eps={eps:g}", alpha=0.85)
        color = line.get_color()
        for H, e, good in zip(Hs, errs, ok):
            ax.loglog([H], [e], "o", mfc=color if good else "none",
                      mec=color, ms=5)
    if finite:
        H0, H1 = min(table.H_list), max(table.H_list)
        anchor = min(finite)
        for p, style in ((1, ":"), (2, "--"), (3, "-.")):
            ref = [anchor * (H / H0) ** p for H in (H0, H1)]
            ax.loglog([H0, H1], ref, style, color="gray", lw=0.8,
                      label=f"slope {p}")
    ax.set_xlabel("H")
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def solution_figure(sol, path: str, n: int = 801) -> str:
    """Discrete solution against the exact one, with mesh nodes as a rug."""
    u = sol.u
    mesh = u.space.mesh
    x = np.linspace(0.0, 1.0, n)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(x, u(x), "-", label="discrete")
    ax.plot(x, sol.problem.exact(x, 0), "--", label="exact")
    y0 = ax.get_ylim()[0]
    ax.plot(mesh.nodes, np.full(mesh.nodes.shape, y0), "|", color="gray",
            ms=8, label=f"nodes ({mesh.n_elements} elements)")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title(f"{sol.problem.id}  eps={sol.problem.eps:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
