"""Matplotlib renderings of evaluation reports and detection results.

Figures are built on ``matplotlib.figure.Figure`` directly so no GUI backend
or pyplot state is involved; everything goes straight to a file.
"""

from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from .evaluation import EvalReport
from .facedetect import DetectionResult
from .imagecore import RgbImage
from .recognition import coefficient_count

ARM_COLORS = {"raw": "#7f7f7f", "normalized": "#1f77b4"}


def _save(fig: Figure, path, dpi: int = 120) -> None:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=dpi, bbox_inches="tight")


def plot_report(report: EvalReport, path, title: str = "Recognition rate by DWT level") -> None:
    levels = report.levels()
    arms = report.arms()
    x = np.arange(len(levels))
    width = 0.8 / max(len(arms), 1)

    fig = Figure(figsize=(6.4, 3.8))
    ax = fig.add_subplot(1, 1, 1)
    for i, arm in enumerate(arms):
        rates = [100 * report.rate(level, arm) for level in levels]
        bars = ax.bar(x + (i - (len(arms) - 1) / 2) * width, rates, width,
                      label=arm, color=ARM_COLORS.get(arm))
        ax.bar_label(bars, fmt="%.1f", fontsize=7, padding=1)
    ax.set_xticks(x, [f"L{lv}\n{coefficient_count(lv)}" for lv in levels])
    ax.set_xlabel("decomposition level / coefficients")
    ax.set_ylabel("rank-1 rate (%)")
    ax.set_ylim(0, 108)
    ax.set_title(title)
    ax.legend(loc="upper center", bbox_to_anchor=(0.5, -0.25), ncol=len(arms), frameon=False, fontsize=8)
    ax.spines[["top", "right"]].set_visible(False)
    _save(fig, path)


def plot_detection(img: RgbImage, result: DetectionResult, path) -> None:
    """Three panels: input with face box, skin mask, extracted grey face."""
    fig = Figure(figsize=(9, 3))
    axes = fig.subplots(1, 3)
    axes[0].imshow(img.data)
    x0, y0, x1, y1 = result.bbox
    axes[0].add_patch(Rectangle((x0 - 0.5, y0 - 0.5), x1 - x0 + 1, y1 - y0 + 1,
                                fill=False, edgecolor="yellow", linewidth=1.5))
    axes[0].set_title("input")
    if result.mask is not None:
        axes[1].imshow(result.mask.bits, cmap="gray", interpolation="nearest")
    axes[1].set_title("skin mask")
    axes[2].imshow(result.face.data, cmap="gray", vmin=0, vmax=255)
    axes[2].set_title(f"face {result.face.width}x{result.face.height}")
    for ax in axes:
        ax.set_axis_off()
    _save(fig, path)
