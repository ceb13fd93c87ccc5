"""Deterministic cell-level discrete-event simulator.

Sources pace fixed-size cells at min(acr, app_cap), every nrm-th cell being a
forward RM cell that declares the raw ACR in its CCR field.  Destinations
turn FRMs straight around as backward RM cells.  Switch output ports count
forward cells into measurement intervals (closed at interval_cells cells or
interval_max_s, whichever first), run the configured explicit-rate algorithm
at each close, and stamp the frozen per-VC ER table onto passing BRMs via the
min rule.  Sources apply BRM feedback immediately.

Link transmission is modeled analytically: each directed channel keeps a
next-free time, FIFO order falls out of max(now, next_free) + tx, and the
queue length is the backlog divided by the cell time.  No cell is ever
dropped.  Two runs of the same scenario produce identical traces.
"""

from __future__ import annotations

import heapq
import math

from . import ratealloc
from .errors import AbrsimError
from .metrics import AcrSample, PortSample, RunStats, TraceSet
from .ratealloc import (
    AllocatorState,
    IntervalMeasurement,
    RateSource,
    VcObservation,
)
from .scenarios import PROP_DELAY_S_PER_KM, Scenario, route_links, validate_scenario

CELL_BYTES = 53
CELL_BITS = CELL_BYTES * 8

# Event kinds, in tie-break order at equal timestamps.
EV_ARRIVAL = 0
EV_INTERVAL = 2
EV_SEND = 3

DATA = 0
FRM = 1
BRM = 2

# Pacing floor: one cell per second.  Keeps the send loop alive if a custom
# scenario ever drives an ER (and hence ACR) to zero.
MIN_SEND_RATE_MBPS = CELL_BITS / 1e6

_ROLE_SWITCH = 0
_ROLE_DEST = 1
_ROLE_SOURCE = 2


def apply_brm_acr(acr: float, er: float, pcr: float, rif: float) -> float:
    """Source rate update on a backward RM cell.

    rif = 1 jumps straight to min(er, pcr); rif < 1 additionally limits any
    increase to rif * pcr per cell.  Decreases always take effect in full.
    """
    if rif >= 1.0:
        new = min(er, pcr)
    else:
        new = min(acr + rif * pcr, er, pcr)
    return max(new, 0.0)


class _Cell:
    __slots__ = ("vc_id", "kind", "ccr", "er", "serial")

    def __init__(self, vc_id, kind, ccr, er, serial=0):
        self.vc_id = vc_id
        self.kind = kind
        self.ccr = ccr
        self.er = er
        self.serial = serial


class _Channel:
    """One direction of one link: serialized transmission plus propagation."""

    __slots__ = ("tx_s", "prop_s", "next_free")

    def __init__(self, bandwidth_mbps: float, length_km: float):
        self.tx_s = CELL_BITS / (bandwidth_mbps * 1e6)
        self.prop_s = length_km * PROP_DELAY_S_PER_KM
        self.next_free = 0.0

    def queue_cells(self, now: float) -> int:
        backlog = self.next_free - now
        if backlog <= 0.0:
            return 0
        return math.ceil(backlog / self.tx_s)


class _Source:
    __slots__ = (
        "vc_id", "acr", "pcr", "rif", "app_cap", "stop", "emitted",
        "chan", "first_hop",
    )

    def __init__(self, vc, chan, first_hop):
        self.vc_id = vc.vc_id
        self.acr = vc.icr_mbps
        self.pcr = vc.pcr_mbps
        self.rif = vc.rif
        self.app_cap = vc.app_cap_mbps if vc.app_cap_mbps is not None else math.inf
        self.stop = vc.stop_time_s if vc.stop_time_s is not None else math.inf
        self.emitted = 0
        self.chan = chan
        self.first_hop = first_hop


class _Port:
    """A switch output port in the forward direction of its VCs."""

    __slots__ = (
        "port_id", "algorithm", "capacity", "bandwidth", "tu", "vbr",
        "vcs", "state", "channel", "interval_start", "cells",
        "per_vc_cells", "last_ccr", "frozen_er", "epoch",
    )

    def __init__(self, port_id, switch_def, link_def, channel):
        self.port_id = port_id
        self.algorithm = switch_def.algorithm
        self.bandwidth = link_def.bandwidth_mbps
        self.tu = switch_def.target_utilization
        self.vbr = switch_def.vbr_cbr_mbps
        self.capacity = max(0.0, self.tu * self.bandwidth - self.vbr)
        self.vcs = []
        self.state = AllocatorState(delta=switch_def.delta)
        self.channel = channel
        self.interval_start = 0.0
        self.cells = 0
        self.per_vc_cells = {}
        self.last_ccr = {}
        self.frozen_er = None
        self.epoch = 0


class Simulator:
    """One run of one scenario.  Build, call run() once, read the TraceSet."""

    def __init__(self, scenario: Scenario, record_brm_path: bool = False):
        validate_scenario(scenario)
        self.scenario = scenario
        self.nrm = scenario.nrm
        self.interval_cells = scenario.interval_cells
        self.interval_max = scenario.interval_max_s
        self.stats = RunStats()
        self.trace = TraceSet(
            name=scenario.name, duration_s=scenario.sim_duration_s, stats=self.stats
        )
        self.brm_log: list[tuple[int, str, float, float]] | None = (
            [] if record_brm_path else None
        )

        self._channels = {}
        for link in scenario.links:
            self._channels[(link.from_node, link.to_node)] = _Channel(
                link.bandwidth_mbps, link.length_km
            )
            self._channels[(link.to_node, link.from_node)] = _Channel(
                link.bandwidth_mbps, link.length_km
            )

        switch_defs = {sw.switch_id: sw for sw in scenario.switches}
        self.ports: dict[str, _Port] = {}
        self._plan = {}
        self._sources = {}
        for vc in scenario.vcs:
            nodes = vc.route
            links = route_links(scenario, vc)
            src = _Source(vc, self._channels[(nodes[0], nodes[1])], nodes[1])
            self._sources[vc.vc_id] = src
            self._plan[(vc.vc_id, nodes[0])] = (_ROLE_SOURCE, src)
            self._plan[(vc.vc_id, nodes[-1])] = (
                _ROLE_DEST,
                self._channels[(nodes[-1], nodes[-2])],
                nodes[-2],
            )
            for i in range(1, len(nodes) - 1):
                node = nodes[i]
                egress = links[i]
                port_id = f"{node}/{egress.link_id}"
                port = self.ports.get(port_id)
                if port is None:
                    port = _Port(
                        port_id,
                        switch_defs[node],
                        egress,
                        self._channels[(node, nodes[i + 1])],
                    )
                    self.ports[port_id] = port
                port.vcs.append(vc.vc_id)
                port.per_vc_cells[vc.vc_id] = 0
                self._plan[(vc.vc_id, node)] = (
                    _ROLE_SWITCH,
                    port,
                    self._channels[(node, nodes[i + 1])],
                    self._channels[(node, nodes[i - 1])],
                    nodes[i + 1],
                    nodes[i - 1],
                )
            self.stats.fwd_sent[vc.vc_id] = 0
            self.stats.fwd_delivered[vc.vc_id] = 0
            self.stats.fwd_in_flight[vc.vc_id] = 0

        for port in self.ports.values():
            port.state.fair_share_prev = port.capacity / len(port.vcs)

        self._heap = []
        self._next_seq = 0
        self._next_serial = 1
        for vc in scenario.vcs:
            self._push(vc.start_time_s, EV_SEND, self._sources[vc.vc_id])
        for port in self.ports.values():
            self._push(self.interval_max, EV_INTERVAL, port, 0)

    def _push(self, time, kind, *payload):
        self._next_seq += 1
        heapq.heappush(self._heap, (time, kind, self._next_seq, *payload))

    def _transmit(self, now, cell, chan, next_node):
        dep = chan.next_free if chan.next_free > now else now
        dep += chan.tx_s
        chan.next_free = dep
        self._push(dep + chan.prop_s, EV_ARRIVAL, cell, next_node)

    def _on_send(self, now, src):
        if now >= src.stop:
            return
        src.emitted += 1
        if src.emitted % self.nrm == 0:
            self._next_serial += 1
            cell = _Cell(src.vc_id, FRM, src.acr, src.pcr, self._next_serial)
        else:
            cell = _Cell(src.vc_id, DATA, 0.0, 0.0)
        self.stats.fwd_sent[src.vc_id] += 1
        self._transmit(now, cell, src.chan, src.first_hop)
        rate = src.acr if src.acr < src.app_cap else src.app_cap
        if rate < MIN_SEND_RATE_MBPS:
            rate = MIN_SEND_RATE_MBPS
        self._push(now + CELL_BITS / (rate * 1e6), EV_SEND, src)

    def _on_arrival(self, now, cell, node):
        role = self._plan[(cell.vc_id, node)]
        code = role[0]
        if code == _ROLE_SWITCH:
            _, port, fwd_chan, bwd_chan, fwd_next, bwd_next = role
            if cell.kind == BRM:
                if port.frozen_er is not None:
                    limit = port.frozen_er[cell.vc_id]
                    if self.brm_log is not None:
                        self.brm_log.append(
                            (cell.serial, port.port_id, cell.er, min(cell.er, limit))
                        )
                    if limit < cell.er:
                        cell.er = limit
                self._transmit(now, cell, bwd_chan, bwd_next)
            else:
                port.cells += 1
                port.per_vc_cells[cell.vc_id] += 1
                if cell.kind == FRM:
                    port.last_ccr[cell.vc_id] = cell.ccr
                if port.cells >= self.interval_cells:
                    self._close_interval(port, now)
                self._transmit(now, cell, fwd_chan, fwd_next)
        elif code == _ROLE_DEST:
            _, bwd_chan, bwd_next = role
            if cell.kind == FRM:
                self.stats.fwd_delivered[cell.vc_id] += 1
                brm = _Cell(cell.vc_id, BRM, cell.ccr, cell.er, cell.serial)
                self._transmit(now, brm, bwd_chan, bwd_next)
            else:
                self.stats.fwd_delivered[cell.vc_id] += 1
        else:
            src = role[1]
            src.acr = apply_brm_acr(src.acr, cell.er, src.pcr, src.rif)
            self.stats.brms_to_sources += 1
            allowed = src.acr if src.acr < src.app_cap else src.app_cap
            self.trace.acr.append(AcrSample(now, src.vc_id, allowed))

    def _close_interval(self, port, now):
        elapsed = now - port.interval_start
        if elapsed <= 0.0:
            return
        scale = CELL_BITS / (elapsed * 1e6)
        obs = []
        for vid in port.vcs:
            count = port.per_vc_cells[vid]
            obs.append(
                VcObservation(
                    vc_id=vid,
                    ccr_from_rm=port.last_ccr.get(vid),
                    measured_rate=count * scale,
                    saw_cell=count > 0,
                )
            )
        meas = IntervalMeasurement(
            abr_input_rate=port.cells * scale,
            link_bandwidth=port.bandwidth,
            target_utilization=port.tu,
            vbr_cbr_usage=port.vbr,
            per_vc=tuple(obs),
        )
        try:
            alg = port.algorithm
            if alg == "erica-original":
                decision = ratealloc.er_original(meas, port.state)
            elif alg == "erica-maxalloc":
                decision = ratealloc.er_maxalloc(meas, port.state)
            elif alg == "erica-neff-ccr":
                decision = ratealloc.er_neff(meas, port.state, RateSource.CCR_FROM_RM)
            else:
                decision = ratealloc.er_neff(
                    meas, port.state, RateSource.MEASURED_AT_SWITCH
                )
        except AbrsimError:
            # Keep stamping the previous table for one more interval.
            self.stats.allocator_errors += 1
        else:
            port.frozen_er = decision.per_vc_er
            port.state.fair_share_prev = decision.fair_share
            port.state.max_alloc_previous = decision.max_allocation
            port.state.n_eff_prev = decision.n_eff
            self.trace.ports.append(
                PortSample(
                    time_s=now,
                    port_id=port.port_id,
                    z=decision.load_factor,
                    n_eff=decision.n_eff,
                    fair_share_mbps=decision.fair_share,
                    queue_cells=port.channel.queue_cells(now),
                )
            )
        self.stats.intervals_closed += 1
        port.interval_start = now
        port.cells = 0
        for vid in port.vcs:
            port.per_vc_cells[vid] = 0
        port.epoch += 1
        self._push(now + self.interval_max, EV_INTERVAL, port, port.epoch)

    def run(self) -> TraceSet:
        heap = self._heap
        duration = self.scenario.sim_duration_s
        while heap:
            event = heapq.heappop(heap)
            if event[0] > duration:
                heapq.heappush(heap, event)
                break
            self.stats.events += 1
            kind = event[1]
            if kind == EV_ARRIVAL:
                self._on_arrival(event[0], event[3], event[4])
            elif kind == EV_SEND:
                self._on_send(event[0], event[3])
            elif event[4] == event[3].epoch:
                self._close_interval(event[3], event[0])
        # Forward cells still traveling at cutoff: each has exactly one
        # pending arrival event, so the leftover heap is the census.
        for event in heap:
            if event[1] == EV_ARRIVAL and event[3].kind != BRM:
                self.stats.fwd_in_flight[event[3].vc_id] += 1
        return self.trace


def run(scenario: Scenario) -> TraceSet:
    """Simulate the scenario and return its traces."""
    return Simulator(scenario).run()
