"""Diagnostic figures rendered to SVG with matplotlib.

Figures are rendered off-screen and serialised with a fixed hash salt and no
timestamp, so identical inputs give byte-identical files.
"""

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .clinical import ZONE_LABEL_POSITIONS, clarke_boundaries  # noqa: E402

STYLE = {
    "svg.hashsalt": "ppglucose",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}


def figure_bytes(fig):
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()


def render(draw, *args, **kwargs):
    """Call ``draw(*args, **kwargs)`` under the package style and return SVG bytes."""
    with plt.rc_context(STYLE):
        fig = draw(*args, **kwargs)
        return figure_bytes(fig)


def _sweep(curves):
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    for label in sorted(curves):
        rows = curves[label]
        ks = [r[0] for r in rows]
        ax.plot(ks, [r[1] for r in rows], marker="o", markersize=3, label=label)
    ax.set_xlabel("number of principal components")
    ax.set_ylabel("SEP (mg/dL)")
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def sweep_svg(curves):
    """SEP against component count; ``curves`` maps label -> [(k, sep, rmsep), ...]."""
    return render(_sweep, curves)


def _bars(seps):
    labels = list(seps)
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    values = [seps[k] for k in labels]
    bars = ax.bar(range(len(labels)), values, color="0.55")
    for bar, v in zip(bars, values):
        ax.annotate(f"{v:.2f}", (bar.get_x() + bar.get_width() / 2, v), ha="center", va="bottom", fontsize=8)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels)
    ax.set_ylabel("SEP (mg/dL)")
    fig.tight_layout()
    return fig


def sep_bars_svg(seps):
    """Bar chart of SEP per approach, in the given order."""
    return render(_bars, seps)


def _clarke(reference, predicted, limit):
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.scatter(reference, predicted, s=10, c="k", zorder=3)
    ax.plot([0, limit], [0, limit], ":", color="0.4")
    for _, ((x0, y0), (x1, y1)) in clarke_boundaries(limit):
        ax.plot([x0, x1], [y0, y1], "-", color="0.2", linewidth=1.0)
    for zone, spots in ZONE_LABEL_POSITIONS.items():
        for x, y in spots:
            ax.text(x * limit / 400, y * limit / 400, zone, fontsize=12)
    ax.set_xlim(0, limit)
    ax.set_ylim(0, limit)
    ax.set_aspect("equal")
    ax.set_xlabel("reference glucose (mg/dL)")
    ax.set_ylabel("predicted glucose (mg/dL)")
    fig.tight_layout()
    return fig


def clarke_svg(reference, predicted, limit=400.0):
    """Clarke error grid with the prediction scatter."""
    top = max(np.max(reference, initial=0.0), np.max(predicted, initial=0.0))
    if top > limit:
        limit = float(np.ceil(top / 100.0) * 100.0)
    return render(_clarke, reference, predicted, limit)


def _stages(stages, peaks):
    fig, axes = plt.subplots(len(stages), 1, figsize=(6.0, 1.6 * len(stages)), sharex=True)
    axes = np.atleast_1d(axes)
    for ax, (label, signal) in zip(axes, stages.items()):
        t = signal.times + signal.meta.get("offset", 0) / signal.fs
        ax.plot(t, signal.samples, color="k", linewidth=0.8)
        idx = peaks.get(label)
        if idx is not None and len(idx):
            ax.plot(t[idx], signal.samples[idx], "o", markersize=3, mfc="none", color="r")
        ax.set_ylabel(label)
    axes[-1].set_xlabel("time (s)")
    fig.tight_layout()
    return fig


def stages_svg(stages, peaks=None):
    """Stacked processing stages; ``stages`` maps label -> PpgSignal."""
    return render(_stages, stages, peaks or {})
