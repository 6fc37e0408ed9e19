"""SVG figures for the diagnostics; output is byte-stable for identical inputs."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .diagnostics import QQData  # noqa: E402

_STYLE = {
    "svg.hashsalt": "mgarch",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}


def _save(fig, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def qq_plot_svg(qq: QQData, path, title: Optional[str] = None) -> Path:
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(4.2, 4.2))
        ax.scatter(qq.reference_quantiles, qq.sorted_residuals, s=4, color="#1f4e79", lw=0)
        lo = float(min(qq.reference_quantiles[0], qq.sorted_residuals[0]))
        hi = float(max(qq.reference_quantiles[-1], qq.sorted_residuals[-1]))
        ax.plot([lo, hi], [lo, hi], color="#b03a2e", lw=0.8)
        ax.set_xlabel(f"t({qq.d:g}) quantiles")
        ax.set_ylabel("sorted residuals")
        ax.set_title(title or f"QQ plot against t({qq.d:g})")
        return _save(fig, path)


def volatility_overlay_svg(series: Mapping[str, np.ndarray], path,
                           squared_returns: Optional[np.ndarray] = None,
                           title: str = "Normalized volatility") -> Path:
    """Overlay several normalized volatility paths, optionally over normalized squared returns."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(7.5, 3.2))
        if squared_returns is not None:
            x2 = np.asarray(squared_returns, dtype=float)
            ax.plot(x2 / x2.sum(), color="0.75", lw=0.5, label="squared returns (normalized)")
        for label, u in series.items():
            ax.plot(np.asarray(u), lw=0.8, label=label)
        ax.set_xlabel("t")
        ax.set_ylabel("u_t")
        ax.set_title(title)
        ax.legend(frameon=False, fontsize=7)
        return _save(fig, path)
