"""Figure rendering for the CLI report path.

Every plot is written straight to a file next to the delimited output;
nothing is shown interactively.  Curve styling follows the usual
presentation: blue for the coldest (farthest) state, warm colors for the
comparison states, log-scaled distance axes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update({"figure.figsize": (6.0, 4.0), "figure.dpi": 150, "font.size": 9})

_PNG_META = {"Software": None}  # keep PNG bytes stable across environments


def _finalize(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def save_trajectory_figure(
    path: str,
    times: np.ndarray,
    curves: dict[str, np.ndarray],
    crossings: dict[str, float | None] | None = None,
    title: str = "",
) -> None:
    """Distance-versus-time curves on a log axis, with crossing markers."""
    fig, ax = plt.subplots()
    labels = list(curves)
    colors = ["tab:blue"] + [plt.get_cmap("autumn")(x) for x in np.linspace(0.0, 0.75, max(len(labels) - 1, 1))]
    for label, color in zip(labels, colors):
        d = np.asarray(curves[label])
        positive = d > 0
        ax.plot(times[positive], d[positive], label=f"T={label}", color=color)
    if crossings:
        for label, t_cross in crossings.items():
            if t_cross is not None:
                ax.axvline(t_cross, color="gray", linestyle=":", linewidth=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("D(t)")
    ax.set_yscale("log")
    if times[-1] / max(times[1], 1e-12) > 1e3:
        ax.set_xscale("symlog", linthresh=max(times[1], 1e-12))
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    _finalize(fig, path)


def save_spectrum_figure(path: str, eigenvalues: np.ndarray, title: str = "") -> None:
    """Eigenvalues in the complex plane."""
    fig, ax = plt.subplots()
    ax.scatter(eigenvalues.real, eigenvalues.imag, s=6, alpha=0.6, linewidths=0)
    ax.set_xlabel(r"Re $\lambda$")
    ax.set_ylabel(r"Im $\lambda$")
    if title:
        ax.set_title(title)
    _finalize(fig, path)


def save_overlap_figure(path: str, weights_by_label: dict[str, np.ndarray], title: str = "") -> None:
    """Mode weights versus sorted mode index (1-based), log scale."""
    fig, ax = plt.subplots()
    for label, weights in weights_by_label.items():
        idx = np.arange(1, len(weights) + 1)
        positive = weights > 0
        ax.scatter(idx[positive], weights[positive], s=5, alpha=0.6, linewidths=0, label=f"T={label}")
    ax.set_xlabel("mode index")
    ax.set_ylabel(r"$|\mathrm{Tr}(l_n^\dagger \rho_0)|$")
    ax.set_yscale("log")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    _finalize(fig, path)


def save_delta_window_figure(
    path: str,
    intervals: list,  # WindowInterval records
    title: str = "",
) -> None:
    """Crossing windows in the anisotropy, one horizontal bar per (L, T)."""
    fig, ax = plt.subplots()
    keys = sorted({(iv.num_sites, iv.temperature) for iv in intervals})
    for y, (num_sites, temp) in enumerate(keys):
        for iv in intervals:
            if (iv.num_sites, iv.temperature) == (num_sites, temp):
                ax.plot([iv.lo, iv.hi], [y, y], linewidth=6, solid_capstyle="butt", color="tab:blue")
    ax.set_yticks(range(len(keys)))
    ax.set_yticklabels([f"L={ns}, T={t}" for ns, t in keys])
    ax.set_xlabel(r"$\Delta$")
    if title:
        ax.set_title(title)
    _finalize(fig, path)


def save_ratio_verdict_figure(path: str, ratios: list[float], verdicts: list[str], title: str = "") -> None:
    """Classification outcome versus coupling ratio."""
    order = ["none", "weak", "strong", "error"]
    fig, ax = plt.subplots()
    ax.scatter(ratios, [order.index(v) for v in verdicts], s=25)
    ax.set_yticks(range(len(order)))
    ax.set_yticklabels(order)
    ax.set_xlabel(r"$J_2 / J_1$")
    if title:
        ax.set_title(title)
    _finalize(fig, path)
