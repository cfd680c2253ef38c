"""Matplotlib figure rendering for run reports.

Figures are written as SVG with a fixed hash salt and no creation date, so
a given config renders byte-identical files on every run.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_STYLE = {
    "svg.hashsalt": "lzeros",
    "figure.figsize": (6.0, 4.5),
    "font.size": 9,
    "axes.linewidth": 0.8,
}

_MARKERS = {
    "exact": dict(marker="o", s=8, c="black", linewidths=0, zorder=4, label="exact"),
    "approximate": dict(marker="x", s=22, c="crimson", linewidths=0.9, zorder=5,
                        label="approximate"),
    "analytic": dict(marker="+", s=26, c="tab:blue", linewidths=0.9, zorder=5,
                     label="analytic"),
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_heatmap(evaluator, window, zero_sets, path, mirror_beta=False,
                   grid=(300, 300)):
    """|L(z)/L(beta)| over the window with zero markers on top.

    ``zero_sets`` maps provenance names to ZeroSet objects.  The color scale
    is monotone in log-modulus.  ``mirror_beta`` flips the beta axis (plot
    orientation only; data files always carry +beta).
    """
    nb, nt = grid
    betas = np.linspace(window.beta_min, window.beta_max, nb)
    ts = np.linspace(window.t_min, window.t_max, nt)
    B, T = np.meshgrid(betas, ts)
    log_mod, _ = evaluator.log_amplitude(B + 1j * T)
    ref, _ = evaluator.log_amplitude(betas.astype(complex))
    img = log_mod - ref[None, :]

    sign = -1.0 if mirror_beta else 1.0
    extent = (sign * window.beta_min, sign * window.beta_max, window.t_min, window.t_max)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        vmin = max(float(np.nanmin(img)), -12.0)
        im = ax.imshow(img[:, ::-1] if mirror_beta else img, origin="lower",
                       extent=(min(extent[0], extent[1]), max(extent[0], extent[1]),
                               extent[2], extent[3]),
                       aspect="auto", cmap="viridis", vmin=vmin, vmax=0.0)
        fig.colorbar(im, ax=ax, label=r"$\ln|\bar{L}|$")
        for name, zs in zero_sets.items():
            if zs is None or len(zs) == 0:
                continue
            pts = zs.points
            style = _MARKERS.get(name, _MARKERS["exact"])
            ax.scatter(sign * pts.real, pts.imag, **style)
        ax.set_xlabel(r"$-\beta$" if mirror_beta else r"$\beta$")
        ax.set_ylabel("t")
        if zero_sets:
            ax.legend(loc="upper right", fontsize=7)
        _save(fig, path)


def render_delta_eta(rows_by_width, path):
    """Box-count discrepancy against box-center time, one curve per width."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for width in sorted(rows_by_width):
            rows = rows_by_width[width]
            tc = [r[0] for r in rows if r[1] is not None]
            de = [r[1] for r in rows if r[1] is not None]
            ax.plot(tc, de, marker="s", ms=4, label=f"width {width:g}")
        ax.set_xlabel("box center t")
        ax.set_ylabel(r"$\delta\eta$")
        ax.legend(fontsize=7)
        _save(fig, path)


def render_polylines(polylines, path, points=None, xlabel=r"$\beta$", ylabel="t"):
    """Trajectory polylines with optional reference points."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for line in polylines:
            line = np.asarray(line, dtype=complex)
            ax.plot(line.real, line.imag, lw=0.9)
        if points is not None and len(points):
            pts = np.asarray(points, dtype=complex)
            ax.scatter(pts.real, pts.imag, s=8, c="black", zorder=5)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        _save(fig, path)
