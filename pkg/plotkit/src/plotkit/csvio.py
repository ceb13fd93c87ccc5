"""Readers for the two simulator trace formats.

Only the documented CSV contract is consumed here: acr.csv with columns
time_s,vc_id,acr_mbps and port.csv with time_s,port_id,z,n_eff,
fair_share_mbps,queue_cells.  Wrong headers fail loudly so a stale or
foreign file cannot render as an empty plot.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

ACR_COLUMNS = ["time_s", "vc_id", "acr_mbps"]
PORT_COLUMNS = ["time_s", "port_id", "z", "n_eff", "fair_share_mbps", "queue_cells"]


class MissingColumn(ValueError):
    pass


@dataclass
class PlotSpec:
    """What to draw: input, output, series filter and axis dressing."""

    csv_path: str
    out_image: str
    series: list[str] = field(default_factory=list)  # empty = all
    title: str = ""
    time_range_ms: tuple[float, float] | None = None

    def wants(self, series_id: str) -> bool:
        return not self.series or series_id in self.series


def _check_header(path, header, expected):
    if header != expected:
        raise MissingColumn(
            f"{path}: expected columns {','.join(expected)}, got "
            f"{','.join(header or ['<empty>'])}"
        )


def read_acr(path: str) -> dict[str, tuple[list[float], list[float]]]:
    """Per-VC (times in ms, ACR in Mbps), in file order."""
    series: dict[str, tuple[list[float], list[float]]] = {}
    with open(path, newline="") as f:
        rows = csv.reader(f)
        _check_header(path, next(rows, None), ACR_COLUMNS)
        for row in rows:
            times, values = series.setdefault(row[1], ([], []))
            times.append(float(row[0]) * 1e3)
            values.append(float(row[2]))
    return series


def read_port(path: str) -> dict[str, dict[str, list[float]]]:
    """Per-port columns: times_ms, z, n_eff, fair_share_mbps, queue_cells."""
    series: dict[str, dict[str, list[float]]] = {}
    with open(path, newline="") as f:
        rows = csv.reader(f)
        _check_header(path, next(rows, None), PORT_COLUMNS)
        for row in rows:
            cols = series.setdefault(
                row[1],
                {"times_ms": [], "z": [], "n_eff": [], "fair_share_mbps": [], "queue_cells": []},
            )
            cols["times_ms"].append(float(row[0]) * 1e3)
            cols["z"].append(float(row[2]))
            cols["n_eff"].append(float(row[3]))
            cols["fair_share_mbps"].append(float(row[4]))
            cols["queue_cells"].append(float(row[5]))
    return series
