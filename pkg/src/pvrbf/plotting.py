"""Figure output for the report path.

All functions write straight to a file and close the figure.  PNG metadata
is stripped of the software tag so repeated runs give identical bytes.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "path.simplify": False,
}

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def _figure(width=5.0, nrows=1, ncols=1):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(nrows, ncols, figsize=(width, width * GOLDEN))
    return fig, ax


def _save(fig, path):
    with plt.rc_context(RC):
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_iv(curves, path, quantity="i", title=None):
    """One line per curve; ``quantity`` is ``"i"`` (I-V) or ``"p"`` (P-V).

    Curves whose ``source_tag`` starts with ``rbf`` are drawn dashed.
    """
    fig, ax = _figure()
    with plt.rc_context(RC):
        for c in curves:
            y = c.i if quantity == "i" else c.p
            style = "--" if c.source_tag.startswith("rbf") else "-"
            ax.plot(c.v, y, style, label=f"{c.source_tag} G={c.irradiance:g}")
        ax.axhline(0.0, color="k", lw=0.6)
        ax.set_xlabel("Voltage [V]")
        ax.set_ylabel("Current [A]" if quantity == "i" else "Power [W]")
        if title:
            ax.set_title(title)
        ax.legend(loc="best", ncol=2)
    _save(fig, path)


def plot_power_points(v, g, p, path, title=None):
    """P-V scatter straight from a power network's output."""
    fig, ax = _figure()
    with plt.rc_context(RC):
        for gv in np.unique(g):
            sel = g == gv
            ax.plot(v[sel], p[sel], "--", label=f"rbf-power G={gv:g}")
        ax.set_xlabel("Voltage [V]")
        ax.set_ylabel("Power [W]")
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
    _save(fig, path)


def plot_training(history, surrogate, path):
    """Training error history (left) and output weights (right)."""
    fig, (ax1, ax2) = _figure(width=7.0, ncols=2)
    with plt.rc_context(RC):
        ax1.semilogy(np.arange(1, len(history) + 1), history, ".-")
        ax1.set_xlabel("Neurons")
        ax1.set_ylabel("Relative MSE")
        w = surrogate.weights
        ax2.bar(np.arange(1, len(w) + 1), w)
        ax2.set_xlabel("Neuron")
        ax2.set_ylabel("Weight")
        ax2.set_yscale("symlog", linthresh=1.0)
    _save(fig, path)
