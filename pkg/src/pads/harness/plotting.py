"""Figures rendered next to a metrics CSV."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from pads.harness.metrics import window_local_ratios  # noqa: E402
from pads.kernel.engine import MetricsRow  # noqa: E402
from pads.kernel.types import MigrationRecord  # noqa: E402


def _per_lp(rows: Sequence[MetricsRow], column: str) -> dict[int, tuple[list[int], list[float]]]:
    series: dict[int, tuple[list[int], list[float]]] = {}
    for r in rows:
        steps, values = series.setdefault(r.lp, ([], []))
        steps.append(r.step)
        values.append(getattr(r, column))
    return series


def plot_run(
    rows: Sequence[MetricsRow],
    metrics_path: str | Path,
    window: int = 16,
    migrations: Sequence[MigrationRecord] = (),
) -> list[Path]:
    """Write locality, entity-count and wall-time PNGs beside ``metrics_path``."""
    base = Path(metrics_path)
    stem = base.with_suffix("")
    written = []

    ratios = window_local_ratios(rows, window)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.plot([(i + 1) * window for i in range(len(ratios))], ratios, marker="o", ms=3)
    for m in {r.step for r in migrations}:
        ax.axvline(m, color="0.85", lw=0.5, zorder=0)
    ax.set_ylim(0, 1.02)
    ax.set_xlabel("step")
    ax.set_ylabel("local message ratio")
    ax.set_title(f"locality per {window}-step window")
    path = Path(f"{stem}_locality.png")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    written.append(path)

    for column, label, suffix in (
        ("entities", "resident entities", "entities"),
        ("step_wall_us", "step wall time (us)", "wall"),
    ):
        fig, ax = plt.subplots(figsize=(7, 3.5))
        for lp, (steps, values) in sorted(_per_lp(rows, column).items()):
            ax.plot(steps, values, lw=1, label=f"LP {lp}")
        ax.set_xlabel("step")
        ax.set_ylabel(label)
        ax.legend(fontsize="small", ncol=4)
        path = Path(f"{stem}_{suffix}.png")
        fig.tight_layout()
        fig.savefig(path, dpi=100)
        plt.close(fig)
        written.append(path)
    return written
