"""Figure rendering for the CLI report paths.

Figures accompany the delimited outputs for quick inspection; nothing in
the scripted pipeline reads them back.  matplotlib is imported lazily with
the Agg backend so headless batch runs stay cheap when plots are off.
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def spectrum_figure(spectrum, path):
    """Diagonal ff^t / gg^t components over the frequency grid."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4), sharex=True)
    for ax, table, label in (
        (axes[0], spectrum.ffT, "ff$^t$"),
        (axes[1], spectrum.ggT, "gg$^t$"),
    ):
        for i in range(3):
            ax.loglog(spectrum.omega, np.abs(table[:, i, i]) + 1e-300, label=f"({i+1},{i+1})")
        ax.set_xlabel(r"$\omega$")
        ax.set_title(label)
        ax.grid(True, which="both", alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def kernel_figure(kernel_set, path):
    """Real/imaginary parts of the eta kernel entries."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.4), sharex=True)
    t = kernel_set.t
    for i in range(3):
        for j in range(3):
            if np.any(kernel_set.eta[:, i, j] != 0):
                axes[0].plot(t, kernel_set.eta[:, i, j].real, lw=0.9)
                axes[1].plot(t, kernel_set.eta[:, i, j].imag, lw=0.9)
    axes[0].set_title(r"Re $\eta_{ij}(t)$")
    axes[1].set_title(r"Im $\eta_{ij}(t)$")
    for ax in axes:
        ax.set_xlabel("t")
        ax.grid(alpha=0.3)
    fig.suptitle(f"mode n = {kernel_set.mode.n}", fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def field_figure(t, field, path):
    """Field components at the first sample point over time."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 3.4))
    for c, name in enumerate(("Ex", "Ey", "Ez")):
        ax.plot(t, field[:, 0, c], lw=1.0, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("E")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def verification_figure(report, path):
    """Bar summary of the commutator-identity deviations."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 3.2))
    labels = ["electric", "magnetic"]
    vals = [report["electric"]["max_deviation"], report["magnetic"]["max_deviation"]]
    ax.bar(labels, [max(v, 1e-300) for v in vals], color=["#36648b", "#8b3626"])
    ax.axhline(report["tolerance"], ls="--", c="k", lw=0.8, label="tolerance")
    ax.set_yscale("log")
    ax.set_ylabel("max relative deviation")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
