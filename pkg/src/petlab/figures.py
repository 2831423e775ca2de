"""Figure rendering for analysis reports.

Each report table has a PNG companion so results can be eyeballed without
opening the CSVs. All figures use the Agg backend and a small shared style;
provenance notes go into the PNG metadata, never onto the canvas.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .analysis import MatrixCell, SliceRow
from .sensitivity import SubgroupScoreRow

STYLE = {
    "figure.figsize": (7.0, 4.0),
    "figure.dpi": 150,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
}


def _save(fig: "plt.Figure", path: str | Path, note: str) -> Path:
    path = Path(path)
    metadata = {"Software": f"petlab {__version__}"}
    if note:
        metadata["Description"] = note
    fig.tight_layout()
    fig.savefig(path, metadata=metadata)
    plt.close(fig)
    return path


def slice_figure(rows: Sequence[SliceRow], path: str | Path, note: str = "") -> Path:
    """Grouped P/R/F1 bars per slice."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = np.arange(len(rows))
        width = 0.25
        for offset, (label, attr) in enumerate(
            [("P", "precision"), ("R", "recall"), ("F1", "f1")]
        ):
            ax.bar(x + (offset - 1) * width, [getattr(r, attr) for r in rows], width, label=label)
        ax.set_xticks(x)
        ax.set_xticklabels([r.name for r in rows])
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("Macro metric (mean over runs)")
        ax.legend()
        return _save(fig, path, note)


def sensitivity_figure(rows: Sequence[SubgroupScoreRow], path: str | Path, note: str = "") -> Path:
    """Normalized sensitivity per subgroup, full set next to error set.

    Undefined (empty-subgroup) bars are simply absent rather than drawn at
    zero, so a missing bar reads as "no data", not "score 0".
    """
    datasets = []
    for row in rows:
        if row.dataset not in datasets:
            datasets.append(row.dataset)
    subgroups = []
    for row in rows:
        key = (row.euph_label, row.vague_label)
        if key not in subgroups:
            subgroups.append(key)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = np.arange(len(subgroups))
        width = 0.8 / max(len(datasets), 1)
        by_key = {(r.dataset, r.euph_label, r.vague_label): r for r in rows}
        for i, dataset in enumerate(datasets):
            values = []
            for euph, vague in subgroups:
                r = by_key.get((dataset, euph, vague))
                values.append(r.mean_norm if r is not None and r.defined else np.nan)
            ax.bar(x + (i - (len(datasets) - 1) / 2) * width, values, width, label=dataset)
        ax.set_xticks(x)
        ax.set_xticklabels([f"euph={e}\nvague={v}" for e, v in subgroups])
        ax.set_ylabel("Mean normalized sensitivity")
        ax.legend()
        return _save(fig, path, note)


def results_figure(
    languages: Sequence[str],
    backends: Sequence[str],
    cells: Mapping[tuple[str, str], MatrixCell],
    path: str | Path,
    note: str = "",
) -> Path:
    """Macro F1 per language, one bar group per backend."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = np.arange(len(languages))
        width = 0.8 / max(len(backends), 1)
        for i, backend in enumerate(backends):
            values = [
                cells[(lang, backend)].f1 if (lang, backend) in cells else np.nan
                for lang in languages
            ]
            ax.bar(x + (i - (len(backends) - 1) / 2) * width, values, width, label=backend)
        ax.set_xticks(x)
        ax.set_xticklabels(languages)
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("Macro F1 (mean over runs)")
        ax.legend()
        return _save(fig, path, note)
