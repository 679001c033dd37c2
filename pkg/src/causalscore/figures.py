"""Raster renderings of :class:`~causalscore.experiments.Plot` specs via matplotlib."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import IoFailure  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.4),
    "figure.dpi": 100,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.titlesize": 12,
    "axes.labelsize": 11,
    "legend.frameon": False,
    "savefig.bbox": "tight",
}


def render_png(plot, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            if plot.kind == "heatmap":
                grid = np.asarray(plot.grid, dtype=float)
                im = ax.imshow(grid, origin="lower", cmap="viridis", aspect="auto")
                ax.set_xticks(range(len(plot.col_labels)), plot.col_labels)
                ax.set_yticks(range(len(plot.row_labels)), plot.row_labels)
                for (i, j), v in np.ndenumerate(grid):
                    ax.text(j, i, f"{v:.2f}", ha="center", va="center", fontsize=8,
                            color="black" if v > np.nanmean(grid) else "white")
                fig.colorbar(im, ax=ax)
            else:
                for label, xs, ys in plot.series:
                    if plot.kind == "scatter":
                        ax.scatter(xs, ys, s=4 if len(xs) > 50 else 24, alpha=0.6, label=label)
                    else:
                        ax.plot(xs, ys, lw=1.6, label=label)
                for h in plot.hlines:
                    ax.axhline(h, color="gray", ls="--", lw=1)
                for v in plot.vlines:
                    ax.axvline(v, color="gray", ls="--", lw=1)
                if len(plot.series) > 1:
                    ax.legend()
            ax.set_title(plot.title)
            ax.set_xlabel(plot.xlabel)
            ax.set_ylabel(plot.ylabel)
            fig.savefig(path, metadata={"Software": None})
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc
        finally:
            plt.close(fig)
