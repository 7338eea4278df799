"""Figure rendering.  Every figure is written as SVG plus a PNG fallback."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .taxonomy import DIMENSIONS  # noqa: E402

plt.rcParams["svg.hashsalt"] = "cogappraisal"
_DIM_LABELS = [d.label for d in DIMENSIONS]


def _save(fig, stem: str | Path) -> list[Path]:
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    out = [stem.with_suffix(".svg"), stem.with_suffix(".png")]
    fig.savefig(out[0], metadata={"Date": None})
    fig.savefig(out[1], dpi=150, metadata={"Software": None})
    plt.close(fig)
    return out


def rmse_bars(columns: dict[str, Sequence[float]], stem) -> list[Path]:
    """Grouped bars of per-dimension RMSE, one group per dimension."""
    fig, ax = plt.subplots(figsize=(12, 4.5))
    width = 0.8 / max(len(columns), 1)
    x = np.arange(len(_DIM_LABELS))
    for k, (name, values) in enumerate(columns.items()):
        ax.bar(x + k * width, values, width, label=name)
    ax.set_xticks(x + width * (len(columns) - 1) / 2, _DIM_LABELS, rotation=60, ha="right")
    ax.set_ylabel("RMSE")
    ax.legend()
    fig.tight_layout()
    return _save(fig, stem)


def significance_heatmap(significant: np.ndarray, rows: Sequence[str], title: str, stem) -> list[Path]:
    """White cell = significant, black = not."""
    fig, ax = plt.subplots(figsize=(10, 6))
    ax.imshow(np.asarray(significant, dtype=float), cmap="gray", vmin=0, vmax=1, aspect="auto")
    ax.set_xticks(range(len(_DIM_LABELS)), _DIM_LABELS, rotation=70, ha="right")
    ax.set_yticks(range(len(rows)), rows)
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, stem)


def profile_lines(series: dict[str, Sequence[float]], stem, *, ylabel: str, title: str = "",
                  zero_line: bool = True) -> list[Path]:
    fig, ax = plt.subplots(figsize=(12, 5))
    x = np.arange(len(_DIM_LABELS))
    for name, values in series.items():
        ax.plot(x, values, marker="o", label=name)
    if zero_line:
        ax.axhline(0, color="black", linewidth=0.8)
    ax.set_xticks(x, _DIM_LABELS, rotation=60, ha="right")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize="small", ncol=2)
    fig.tight_layout()
    return _save(fig, stem)
