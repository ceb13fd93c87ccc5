"""Effective-active-VC-count figure (panel b of each figure pair)."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .csvio import MissingColumn, PlotSpec, read_port

FIGSIZE = (8.0, 4.5)
DPI = 120


@dataclass
class PlotResult:
    out_image: str
    series_count: int
    final_values: dict[str, float]


def plot_neff(spec: PlotSpec, with_fair_share: bool = False) -> PlotResult:
    """One n_eff line per port, optional fair-share twin axis."""
    series = read_port(spec.csv_path)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    twin = ax.twinx() if with_fair_share else None
    finals = {}
    for port_id in sorted(series):
        if not spec.wants(port_id):
            continue
        cols = series[port_id]
        ax.step(cols["times_ms"], cols["n_eff"], where="post", label=port_id)
        finals[port_id] = cols["n_eff"][-1]
        if twin is not None:
            twin.step(
                cols["times_ms"],
                cols["fair_share_mbps"],
                where="post",
                linestyle="--",
                alpha=0.5,
            )
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("effective active VCs")
    if twin is not None:
        twin.set_ylabel("fair share (Mbps)")
    if spec.title:
        ax.set_title(spec.title)
    if spec.time_range_ms:
        ax.set_xlim(*spec.time_range_ms)
    if finals:
        ax.legend(loc="upper right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_image, metadata={})
    plt.close(fig)
    return PlotResult(spec.out_image, len(finals), finals)


def build_args(argv):
    p = argparse.ArgumentParser(description="plot per-port effective VC count over time")
    p.add_argument("port_csv")
    p.add_argument("out_image")
    p.add_argument("--port", action="append", default=[], help="restrict to this port (repeatable)")
    p.add_argument("--title", default="")
    p.add_argument("--t-max-ms", type=float, default=None)
    p.add_argument("--fair-share", action="store_true", help="add fair share on a twin axis")
    return p.parse_args(argv)


def main(argv=None) -> int:
    a = build_args(argv)
    rng = (0.0, a.t_max_ms) if a.t_max_ms is not None else None
    spec = PlotSpec(a.port_csv, a.out_image, series=a.port, title=a.title, time_range_ms=rng)
    try:
        result = plot_neff(spec, with_fair_share=a.fair_share)
    except (OSError, MissingColumn) as exc:
        print(exc, file=sys.stderr)
        return 1
    print(f"wrote {result.out_image} ({result.series_count} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
