"""Figure rendering for CLI runs: scatter overlays and diagnostic curves.

Figures are written as SVG next to the CSV outputs. The SVG hash salt and
empty date metadata keep reruns byte-stable.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "denoiserlab"

import matplotlib.pyplot as plt  # noqa: E402

from .datasets import Dataset  # noqa: E402

_SVG_META = {"Date": None}


def _save(fig, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def scatter_overlay(
    target: Dataset | None,
    generated: Dataset,
    path: str | Path,
    title: str = "",
) -> None:
    """Target points in gray under generated points in color (2-D data)."""
    fig, ax = plt.subplots(figsize=(5, 5))
    if target is not None:
        ax.scatter(target.points[:, 0], target.points[:, 1], s=4, c="0.7",
                   alpha=0.5, label=target.name, rasterized=False)
    ax.scatter(generated.points[:, 0], generated.points[:, 1], s=4, c="tab:blue",
               alpha=0.6, label=generated.name)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x0")
    ax.set_ylabel("x1")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", markerscale=3)
    _save(fig, path)


def histogram_overlay(
    target: Dataset | None,
    generated: Dataset,
    path: str | Path,
    title: str = "",
    bins: int = 80,
) -> None:
    """1-D counterpart of the scatter overlay."""
    fig, ax = plt.subplots(figsize=(6, 4))
    if target is not None:
        ax.hist(target.points[:, 0], bins=bins, density=True, color="0.7",
                alpha=0.7, label=target.name)
    ax.hist(generated.points[:, 0], bins=bins, density=True, color="tab:blue",
            alpha=0.6, label=generated.name)
    ax.set_xlabel("x0")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    _save(fig, path)


def sample_figure(target: Dataset | None, generated: Dataset, path: str | Path,
                  title: str = "") -> bool:
    """Dispatch on dimension; returns False when no figure applies."""
    if generated.dim == 2:
        scatter_overlay(target, generated, path, title)
        return True
    if generated.dim == 1:
        histogram_overlay(target, generated, path, title)
        return True
    return False


def line_plot(xs, ys, path: str | Path, xlabel: str, ylabel: str,
              title: str = "", logy: bool = False) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys, marker="o")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    _save(fig, path)
