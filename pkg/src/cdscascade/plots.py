"""Figure rendering for severity curves, buffer curves and P(F)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, ax, xlabel, ylabel, title):
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()


def _curve_label(curve):
    if curve.arm == "baseline":
        return "no risk transfer"
    return f"f = {curve.f:g}"


def plot_severity(curves, n_banks, path):
    """F*/N against gamma, one line per arm."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    for curve in curves:
        ax.plot(
            curve.gammas,
            curve.f_star / n_banks,
            marker="o",
            markersize=4,
            label=_curve_label(curve),
        )
    ax.set_ylim(bottom=0)
    ax.legend()
    _finish(
        fig, ax,
        "equity capital ratio gamma",
        "bankruptcies at the 99.9th percentile, F*/N",
        "Severity of contagion",
    )
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_buffer(buffer_curves, path):
    """gamma_s against gamma per f, with the leverage ratio l' dashed."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    gammas = buffer_curves[0].gammas
    ax.plot(gammas, gammas, color="0.5", linestyle=":", label="gamma (no impact)")
    for curve in buffer_curves:
        line, = ax.plot(
            curve.gammas,
            curve.gamma_s,
            marker="o",
            markersize=4,
            label=f"gamma_s, f = {curve.f:g}",
        )
        ax.plot(
            curve.gammas,
            curve.l_prime,
            linestyle="--",
            alpha=0.6,
            color=line.get_color(),
            label=f"l', f = {curve.f:g}",
        )
    ax.legend(fontsize=8)
    _finish(
        fig, ax,
        "equity capital ratio gamma",
        "systemic capital buffer ratio gamma_s",
        "Effective loss absorbency",
    )
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_distribution(histogram, path, title="Failure count distribution"):
    """Empirical P(F) on a log scale, nonzero outcomes only."""
    histogram = np.asarray(histogram)
    total = histogram.sum()
    support = np.flatnonzero(histogram)
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    ax.semilogy(support, histogram[support] / total, "o", markersize=4)
    ax.set_xlim(left=-1)
    _finish(fig, ax, "number of bankruptcies F", "P(F)", title)
    fig.savefig(path, dpi=150)
    plt.close(fig)
