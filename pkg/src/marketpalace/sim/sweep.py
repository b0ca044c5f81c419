"""Parameter sweeps over simulator configs, reported as CSV."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from marketpalace.errors import MarketPalaceError
from marketpalace.sim.engine import run_experiment
from marketpalace.sim.model import SimConfig, StatsSummary, TrialResult

CSV_COLUMNS = [
    "num_nodes",
    "timer_period_s",
    "k",
    "seed",
    "topology",
    "degree",
    "link_delay_s",
    "trials",
    "n",
    "mean_s",
    "median_s",
    "stddev_s",
    "mode_s",
    "p95_s",
    "error",
]


@dataclass(frozen=True)
class SweepRow:
    config: SimConfig | dict
    summary: StatsSummary | None
    results: tuple[TrialResult, ...] = ()
    error: str = ""


def sweep(configs: Iterable[SimConfig | dict]) -> list[SweepRow]:
    """Run every config; failures become error rows, the sweep continues."""
    rows = []
    for config in configs:
        try:
            if isinstance(config, dict):
                config = SimConfig(**config)
            summary, results = run_experiment(config)
            rows.append(SweepRow(config, summary, tuple(results)))
        except (MarketPalaceError, TypeError, ValueError) as exc:
            rows.append(SweepRow(config, None, (), error=str(exc)))
    return rows


def _config_cells(config: SimConfig | dict) -> dict:
    if isinstance(config, SimConfig):
        return {
            "num_nodes": config.num_nodes,
            "timer_period_s": f"{config.timer_period_s:g}",
            "k": config.k,
            "seed": config.seed,
            "topology": config.topology,
            "degree": "" if config.degree is None else config.degree,
            "link_delay_s": f"{config.link_delay_s:g}",
            "trials": config.trials,
        }
    return {key: config.get(key, "") for key in CSV_COLUMNS[:8]}


def write_sweep_csv(rows: Sequence[SweepRow], fh: io.TextIOBase) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        cells = _config_cells(row.config)
        if row.summary is not None:
            cells.update(
                n=row.summary.n,
                mean_s=f"{row.summary.mean_s:.6f}",
                median_s=f"{row.summary.median_s:.6f}",
                stddev_s=f"{row.summary.stddev_s:.6f}",
                mode_s=f"{row.summary.mode_s:.0f}",
                p95_s=f"{row.summary.p95_s:.6f}",
                error="",
            )
        else:
            cells.update(
                n="", mean_s="", median_s="", stddev_s="", mode_s="", p95_s="",
                error=row.error,
            )
        writer.writerow(cells)
