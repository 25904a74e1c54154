"""Figure rendering for the report path (opt-in via the CLI --plot flag)."""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_curve(curve, path: str) -> str:
    """Spectrum picture: trivial lines, diagonal points, first curve (+ mirror)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    lam1, lam2 = curve.lam1, curve.lam2
    direct = curve.direct_points
    mirror = [p for p in curve.points if p.mirrored]
    a = np.array([p.alpha for p in direct])
    b = np.array([p.beta for p in direct])
    am = np.array([p.alpha for p in mirror])
    bm = np.array([p.beta for p in mirror])
    lim = max(a.max(), bm.max()) * 1.05
    ax.axvline(lam1, color="0.3", lw=1.8)
    ax.axhline(lam1, color="0.3", lw=1.8)
    ax.plot([lam1, lim], [lam1, lim], ls="--", color="0.6", lw=0.8)
    ax.plot(a, b, "o-", color="tab:blue", ms=3.5, lw=1.2, label="first curve")
    ax.plot(am, bm, "o-", color="tab:blue", ms=3.5, lw=1.2, alpha=0.6)
    ax.plot([lam1, lam2], [lam1, lam2], "ks", ms=5)
    ax.annotate(r"$(\lambda_1,\lambda_1)$", (lam1, lam1), textcoords="offset points",
                xytext=(6, -12), fontsize=9)
    ax.annotate(r"$(\lambda_2,\lambda_2)$", (lam2, lam2), textcoords="offset points",
                xytext=(6, 4), fontsize=9)
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel(r"$\beta$")
    ax.set_title("Fucik spectrum: first nontrivial curve")
    ax.set_xlim(lam1 - 0.5, lim)
    ax.set_ylim(lam1 - 0.5, lim)
    ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_eig(pairs, mesh, path: str) -> str:
    """First eigenfunctions over the domain."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 3.6))
    for p in pairs:
        ax.plot(mesh.nodes, p.vector, lw=1.2,
                label=rf"$k={p.index}$, $\lambda={p.lam:.4f}$")
    ax.axhline(0.0, color="0.8", lw=0.6)
    ax.set_xlabel("x" if mesh.domain.kind == "interval" else "r")
    ax.set_ylabel("eigenfunction")
    ax.legend(frameon=False, fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_fracexp(rows, path: str) -> str:
    """First-order expansion errors against the order s (log-log)."""
    plt = _pyplot()
    s = np.array([r[0] for r in rows])
    e_form = np.array([r[1] for r in rows])
    e_eig = np.array([r[2] for r in rows])
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    ax.loglog(s, e_form, "o-", label=r"$e_{\mathrm{form}}$")
    ax.loglog(s, e_eig, "s-", label=r"$e_{\mathrm{eig}}$")
    ax.set_xlabel("s")
    ax.set_ylabel("expansion error")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
