"""Trace collection, steady-state summaries, fairness index, CSV I/O.

Two sample streams per run: source ACR samples (one per backward RM cell
absorbed by a source, so the stream is exactly the source's rate steps) and
per-port interval samples (load factor, effective VC count, fair share,
queue length).  CSV emission uses repr() for floats, which is lossless on
round-trip; read_csv(write_csv(t)) reproduces the streams bit for bit.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import AllZero, EmptyWindow


class AcrSample(NamedTuple):
    time_s: float
    vc_id: str
    acr_mbps: float


class PortSample(NamedTuple):
    time_s: float
    port_id: str
    z: float
    n_eff: float
    fair_share_mbps: float
    queue_cells: int


@dataclass
class RunStats:
    """Counters a run accumulates; conservation: sent = delivered + in flight."""

    events: int = 0
    intervals_closed: int = 0
    allocator_errors: int = 0
    brms_to_sources: int = 0
    fwd_sent: dict[str, int] = field(default_factory=dict)
    fwd_delivered: dict[str, int] = field(default_factory=dict)
    fwd_in_flight: dict[str, int] = field(default_factory=dict)


@dataclass
class TraceSet:
    name: str
    duration_s: float
    acr: list[AcrSample] = field(default_factory=list)
    ports: list[PortSample] = field(default_factory=list)
    stats: RunStats = field(default_factory=RunStats)


@dataclass
class SteadySummary:
    window_start_s: float
    window_end_s: float
    vc_mean_acr: dict[str, float]
    port_mean_z: dict[str, float]
    port_mean_n_eff: dict[str, float]
    port_mean_fair_share: dict[str, float]
    port_max_queue: dict[str, int]


def _window_values(pairs, t0: float):
    """Split (time, value) pairs into in-window values, carrying the last
    pre-window value forward when the window itself is empty."""
    inside = [v for t, v in pairs if t >= t0]
    if inside:
        return inside
    before = [v for t, v in pairs if t < t0]
    if before:
        return [before[-1]]
    return []


def steady_state_summary(trace: TraceSet, window_fraction: float = 0.2) -> SteadySummary:
    """Arithmetic means over the trailing window of the run.

    Streams with no sample inside the window fall back to their last earlier
    sample (the signal is a step function, so it still holds that value).
    """
    if not 0.0 < window_fraction <= 1.0:
        raise ValueError(f"window_fraction must be in (0, 1], got {window_fraction}")
    t0 = trace.duration_s * (1.0 - window_fraction)

    vc_ids = sorted({s.vc_id for s in trace.acr})
    port_ids = sorted({s.port_id for s in trace.ports})
    if not vc_ids and not port_ids:
        raise EmptyWindow("trace holds no samples to summarize")

    vc_mean = {}
    for vid in vc_ids:
        vals = _window_values(
            [(s.time_s, s.acr_mbps) for s in trace.acr if s.vc_id == vid], t0
        )
        if vals:
            vc_mean[vid] = math.fsum(vals) / len(vals)

    mean_z, mean_neff, mean_fs, max_q = {}, {}, {}, {}
    for pid in port_ids:
        rows = [s for s in trace.ports if s.port_id == pid]
        zs = _window_values([(s.time_s, s.z) for s in rows], t0)
        if not zs:
            continue
        ne = _window_values([(s.time_s, s.n_eff) for s in rows], t0)
        fs = _window_values([(s.time_s, s.fair_share_mbps) for s in rows], t0)
        qs = _window_values([(s.time_s, s.queue_cells) for s in rows], t0)
        mean_z[pid] = math.fsum(zs) / len(zs)
        mean_neff[pid] = math.fsum(ne) / len(ne)
        mean_fs[pid] = math.fsum(fs) / len(fs)
        max_q[pid] = max(qs)

    if not vc_mean and not mean_z:
        raise EmptyWindow("no stream has a sample at or before the window")
    return SteadySummary(
        window_start_s=t0,
        window_end_s=trace.duration_s,
        vc_mean_acr=vc_mean,
        port_mean_z=mean_z,
        port_mean_n_eff=mean_neff,
        port_mean_fair_share=mean_fs,
        port_max_queue=max_q,
    )


def bottleneck_port(summary: SteadySummary) -> str:
    """Port with the highest mean load factor (ties broken by id)."""
    if not summary.port_mean_z:
        raise EmptyWindow("summary has no port data")
    return min(summary.port_mean_z, key=lambda p: (-summary.port_mean_z[p], p))


def jain_fairness_index(values) -> float:
    """(Σx)² / (n·Σx²); 1.0 iff all values are equal."""
    vals = list(values)
    if not vals:
        raise AllZero("no values")
    if any(v < 0 for v in vals):
        raise ValueError("values must be nonnegative")
    sq = math.fsum(v * v for v in vals)
    if sq == 0.0:
        raise AllZero("all values are zero")
    total = math.fsum(vals)
    return (total * total) / (len(vals) * sq)


ACR_HEADER = ["time_s", "vc_id", "acr_mbps"]
PORT_HEADER = ["time_s", "port_id", "z", "n_eff", "fair_share_mbps", "queue_cells"]


def write_csv(trace: TraceSet, out_dir: str) -> tuple[str, str]:
    """Emit acr.csv and port.csv under out_dir; returns the two paths."""
    os.makedirs(out_dir, exist_ok=True)
    acr_path = os.path.join(out_dir, "acr.csv")
    port_path = os.path.join(out_dir, "port.csv")
    with open(acr_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(ACR_HEADER)
        for s in trace.acr:
            w.writerow([repr(s.time_s), s.vc_id, repr(s.acr_mbps)])
    with open(port_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(PORT_HEADER)
        for s in trace.ports:
            w.writerow(
                [
                    repr(s.time_s),
                    s.port_id,
                    repr(s.z),
                    repr(s.n_eff),
                    repr(s.fair_share_mbps),
                    s.queue_cells,
                ]
            )
    return acr_path, port_path


def read_csv(out_dir: str) -> TraceSet:
    """Parse a write_csv directory back into a TraceSet.

    Run identity (name, stats) is not stored in the CSVs; duration is
    reconstructed as the latest sample time.
    """
    acr_path = os.path.join(out_dir, "acr.csv")
    port_path = os.path.join(out_dir, "port.csv")
    acr: list[AcrSample] = []
    ports: list[PortSample] = []
    with open(acr_path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if header != ACR_HEADER:
            raise ValueError(f"unexpected acr.csv header: {header}")
        for row in r:
            acr.append(AcrSample(float(row[0]), row[1], float(row[2])))
    with open(port_path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if header != PORT_HEADER:
            raise ValueError(f"unexpected port.csv header: {header}")
        for row in r:
            ports.append(
                PortSample(
                    float(row[0]), row[1], float(row[2]), float(row[3]),
                    float(row[4]), int(row[5]),
                )
            )
    times = [s.time_s for s in acr] + [s.time_s for s in ports]
    return TraceSet(name="", duration_s=max(times) if times else 0.0, acr=acr, ports=ports)
