"""
SVG regret plot: mean log10 immediate regret against iteration, one line per
algorithm, drawn from one or more summary CSVs.
"""
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

from src.errors import PlotError

SUMMARY_COLUMNS = ("algorithm", "iteration", "mean_log10_regret")


def _load_summary(path: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise PlotError(f"Cannot read summary {path}: {e}", files=[str(path)])
    missing = [c for c in SUMMARY_COLUMNS if c not in frame.columns]
    if missing:
        raise PlotError(f"Summary {path} lacks columns {missing}", files=[str(path)])
    return frame


def _source_name(path: str) -> str:
    return Path(path).with_suffix("").as_posix()


def _iteration_grid(frame: pd.DataFrame) -> Tuple[int, ...]:
    grids = {tuple(group["iteration"].tolist())
             for _, group in frame.sort_values(["algorithm", "iteration"]).groupby("algorithm")}
    if len(grids) != 1:
        return ()
    return grids.pop()


def regret_figure(frames: Sequence[pd.DataFrame], sources: Optional[Sequence[str]] = None):
    """
    Build the regret figure.

    Args:
        frames: Summary tables sharing one iteration grid.
        sources: Name of each table, appended to its legend labels when more
            than one table is drawn.

    Returns:
        The matplotlib Figure.
    """
    fig, ax = plt.subplots(figsize=(7, 4.5))
    tag_sources = sources is not None and len(frames) > 1
    for index, frame in enumerate(frames):
        for algorithm, group in frame.sort_values(["algorithm", "iteration"]).groupby("algorithm", sort=True):
            label = f"{algorithm} ({sources[index]})" if tag_sources else str(algorithm)
            ax.plot(group["iteration"].to_numpy(), group["mean_log10_regret"].to_numpy(),
                    label=label, linewidth=1.5)
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean log10 immediate regret")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right")
    fig.tight_layout()
    return fig


def plot_regret(summary_csv_paths: List[str], out: str) -> Path:
    """
    Render summary CSVs into a standalone SVG.

    Args:
        summary_csv_paths: Summary files to draw.
        out: Target SVG path.

    Returns:
        Path of the written file.

    Raises:
        PlotError: On an empty file list, unreadable files or mismatched
            iteration grids. Nothing is written in that case.
    """
    if not summary_csv_paths:
        raise PlotError("No summary files given", files=[])

    frames = [_load_summary(path) for path in summary_csv_paths]
    grids = [_iteration_grid(frame) for frame in frames]
    reference = grids[0]
    offending = [str(path) for path, grid in zip(summary_csv_paths, grids) if not grid or grid != reference]
    if offending:
        if reference:
            offending = [str(summary_csv_paths[0])] + offending
        raise PlotError(f"Iteration grids differ across summaries: {', '.join(offending)}",
                        files=offending)

    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    # no timestamp, stable element ids
    matplotlib.rcParams["svg.hashsalt"] = "regret"
    fig = regret_figure(frames, [_source_name(path) for path in summary_csv_paths])
    try:
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return out_path

