"""Allowed-cell-rate-over-time figure (panel a of each figure pair)."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .csvio import MissingColumn, PlotSpec, read_acr

FIGSIZE = (8.0, 4.5)
DPI = 120


@dataclass
class PlotResult:
    out_image: str
    series_count: int
    final_values: dict[str, float]


def plot_acr(spec: PlotSpec) -> PlotResult:
    """One step line per VC; time in ms, rate in Mbps."""
    series = read_acr(spec.csv_path)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    finals = {}
    for vc_id in sorted(series):
        if not spec.wants(vc_id):
            continue
        times, values = series[vc_id]
        ax.step(times, values, where="post", label=vc_id)
        finals[vc_id] = values[-1]
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("allowed cell rate (Mbps)")
    if spec.title:
        ax.set_title(spec.title)
    if spec.time_range_ms:
        ax.set_xlim(*spec.time_range_ms)
    if finals:
        ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    # Empty metadata keeps repeated renders byte-identical.
    fig.savefig(spec.out_image, metadata={})
    plt.close(fig)
    return PlotResult(spec.out_image, len(finals), finals)


def build_spec(argv) -> PlotSpec:
    p = argparse.ArgumentParser(description="plot per-VC allowed cell rate over time")
    p.add_argument("acr_csv")
    p.add_argument("out_image")
    p.add_argument("--vc", action="append", default=[], help="restrict to this VC (repeatable)")
    p.add_argument("--title", default="")
    p.add_argument("--t-max-ms", type=float, default=None)
    a = p.parse_args(argv)
    rng = (0.0, a.t_max_ms) if a.t_max_ms is not None else None
    return PlotSpec(a.acr_csv, a.out_image, series=a.vc, title=a.title, time_range_ms=rng)


def main(argv=None) -> int:
    spec = build_spec(argv)
    try:
        result = plot_acr(spec)
    except (OSError, MissingColumn) as exc:
        print(exc, file=sys.stderr)
        return 1
    print(f"wrote {result.out_image} ({result.series_count} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
