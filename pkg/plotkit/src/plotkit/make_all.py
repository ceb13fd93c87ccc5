"""Render every figure pair found under a compare-style output tree.

Expects the layout `abrsim compare` writes: one subdirectory per algorithm,
each holding acr.csv and port.csv.  Every pair becomes <name>-acr.png and
<name>-neff.png in the output directory.
"""

from __future__ import annotations

import argparse
import os
import sys

from .acr import plot_acr
from .csvio import MissingColumn, PlotSpec
from .neff import plot_neff


def find_runs(runs_dir: str) -> list[tuple[str, str, str]]:
    """(name, acr.csv, port.csv) for each complete run directory, sorted."""
    runs = []
    if os.path.isfile(os.path.join(runs_dir, "acr.csv")):
        runs.append(
            (
                os.path.basename(os.path.abspath(runs_dir)),
                os.path.join(runs_dir, "acr.csv"),
                os.path.join(runs_dir, "port.csv"),
            )
        )
    for entry in sorted(os.listdir(runs_dir)):
        acr = os.path.join(runs_dir, entry, "acr.csv")
        port = os.path.join(runs_dir, entry, "port.csv")
        if os.path.isfile(acr) and os.path.isfile(port):
            runs.append((entry, acr, port))
    return runs


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description="render ACR and N_eff figures for every run")
    p.add_argument("runs_dir", help="directory holding <run>/acr.csv and <run>/port.csv")
    p.add_argument("--out", default=None, help="image directory (default: runs_dir)")
    a = p.parse_args(argv)

    runs = find_runs(a.runs_dir)
    if not runs:
        print(f"{a.runs_dir}: no run directories with acr.csv and port.csv", file=sys.stderr)
        return 1
    out_dir = a.out or a.runs_dir
    os.makedirs(out_dir, exist_ok=True)

    for name, acr_csv, port_csv in runs:
        try:
            r1 = plot_acr(PlotSpec(acr_csv, os.path.join(out_dir, f"{name}-acr.png"), title=name))
            r2 = plot_neff(
                PlotSpec(port_csv, os.path.join(out_dir, f"{name}-neff.png"), title=name)
            )
        except (OSError, MissingColumn) as exc:
            print(exc, file=sys.stderr)
            return 1
        print(f"wrote {r1.out_image} and {r2.out_image}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
