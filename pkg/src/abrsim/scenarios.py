"""Scenario definitions: a small strict config format plus built-in topologies.

A scenario file is line-based text.  Section headers look like `[kind id]`
with kinds scenario, link, switch and vc; the body is `key = value` lines.
Unknown sections, unknown keys, duplicate ids and missing required keys are
all hard errors.  Units live in the key names (bandwidth_mbps, length_km,
sim_duration_s) so a file reads unambiguously.  See the repository README
for the full grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from importlib import resources

from .errors import ParseError, ValidationError
from .maxmin import AllocationProblem, Flow

ALGORITHMS = (
    "erica-original",
    "erica-maxalloc",
    "erica-neff-ccr",
    "erica-neff-measured",
)

# One-way propagation delay per kilometer of fiber.
PROP_DELAY_S_PER_KM = 5e-6

_ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


@dataclass
class LinkDef:
    link_id: str
    from_node: str
    to_node: str
    bandwidth_mbps: float
    length_km: float = 0.0


@dataclass
class SwitchDef:
    switch_id: str
    algorithm: str = "erica-neff-measured"
    target_utilization: float = 0.9
    delta: float = 0.1
    vbr_cbr_mbps: float = 0.0


@dataclass
class VcDef:
    vc_id: str
    route: tuple[str, ...]
    icr_mbps: float
    pcr_mbps: float
    app_cap_mbps: float | None = None
    rif: float = 1.0
    start_time_s: float = 0.0
    stop_time_s: float | None = None


@dataclass
class Scenario:
    name: str
    sim_duration_s: float
    links: list[LinkDef] = field(default_factory=list)
    switches: list[SwitchDef] = field(default_factory=list)
    vcs: list[VcDef] = field(default_factory=list)
    nrm: int = 32
    interval_cells: int = 100
    interval_max_s: float = 0.001


# Per-section key tables: key -> (converter, required).  Conversion failures
# surface as ParseError with the offending line.
def _as_float(s: str) -> float:
    return float(s)


def _as_int(s: str) -> int:
    if not re.fullmatch(r"[+-]?\d+", s):
        raise ValueError(f"not an integer: {s!r}")
    return int(s)


def _as_str(s: str) -> str:
    return s


def _as_route(s: str) -> tuple[str, ...]:
    return tuple(s.split())


_SECTION_KEYS = {
    "scenario": {
        "name": (_as_str, True),
        "sim_duration_s": (_as_float, True),
        "nrm": (_as_int, False),
        "interval_cells": (_as_int, False),
        "interval_max_s": (_as_float, False),
    },
    "link": {
        "from": (_as_str, True),
        "to": (_as_str, True),
        "bandwidth_mbps": (_as_float, True),
        "length_km": (_as_float, False),
    },
    "switch": {
        "algorithm": (_as_str, False),
        "target_utilization": (_as_float, False),
        "delta": (_as_float, False),
        "vbr_cbr_mbps": (_as_float, False),
    },
    "vc": {
        "route": (_as_route, True),
        "icr_mbps": (_as_float, True),
        "pcr_mbps": (_as_float, True),
        "app_cap_mbps": (_as_float, False),
        "rif": (_as_float, False),
        "start_time_s": (_as_float, False),
        "stop_time_s": (_as_float, False),
    },
}

_HEADER_RE = re.compile(r"^\[([a-z]+)(?:\s+([^\s\]]+))?\]$")


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse scenario text; raises ParseError / ValidationError on bad input."""
    sections: list[tuple[str, str | None, dict, int]] = []
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            m = _HEADER_RE.match(line)
            if not m:
                raise ParseError(f"malformed section header {line!r}", lineno, 1)
            kind, ident = m.group(1), m.group(2)
            if kind not in _SECTION_KEYS:
                raise ParseError(f"unknown section kind {kind!r}", lineno, 2)
            if kind == "scenario":
                if ident is not None:
                    raise ParseError("[scenario] takes no id", lineno, 2)
            else:
                if ident is None:
                    raise ParseError(f"[{kind}] needs an id", lineno, 2)
                if not _ID_RE.match(ident):
                    raise ParseError(f"bad identifier {ident!r}", lineno, len(kind) + 3)
            current = {}
            sections.append((kind, ident, current, lineno))
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno, 1)
        if current is None:
            raise ParseError("key outside any section", lineno, 1)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        kind = sections[-1][0]
        table = _SECTION_KEYS[kind]
        if key not in table:
            raise ParseError(f"unknown key {key!r} in [{kind}]", lineno, 1)
        if key in current:
            raise ParseError(f"duplicate key {key!r}", lineno, 1)
        conv = table[key][0]
        try:
            current[key] = conv(value)
        except ValueError:
            raise ParseError(f"bad value for {key}: {value!r}", lineno, line.index("=") + 2)

    scenario_body = None
    links: list[LinkDef] = []
    switches: list[SwitchDef] = []
    vcs: list[VcDef] = []
    seen_ids: dict[str, set[str]] = {"link": set(), "switch": set(), "vc": set()}
    for kind, ident, body, lineno in sections:
        for key, (_, required) in _SECTION_KEYS[kind].items():
            if required and key not in body:
                raise ParseError(f"[{kind}] section is missing required key {key!r}", lineno, 1)
        if kind == "scenario":
            if scenario_body is not None:
                raise ParseError("duplicate [scenario] section", lineno, 1)
            scenario_body = body
            continue
        if ident in seen_ids[kind]:
            raise ParseError(f"duplicate {kind} id {ident!r}", lineno, 1)
        seen_ids[kind].add(ident)
        if kind == "link":
            links.append(
                LinkDef(
                    link_id=ident,
                    from_node=body["from"],
                    to_node=body["to"],
                    bandwidth_mbps=body["bandwidth_mbps"],
                    length_km=body.get("length_km", 0.0),
                )
            )
        elif kind == "switch":
            switches.append(
                SwitchDef(
                    switch_id=ident,
                    algorithm=body.get("algorithm", "erica-neff-measured"),
                    target_utilization=body.get("target_utilization", 0.9),
                    delta=body.get("delta", 0.1),
                    vbr_cbr_mbps=body.get("vbr_cbr_mbps", 0.0),
                )
            )
        else:
            vcs.append(
                VcDef(
                    vc_id=ident,
                    route=body["route"],
                    icr_mbps=body["icr_mbps"],
                    pcr_mbps=body["pcr_mbps"],
                    app_cap_mbps=body.get("app_cap_mbps"),
                    rif=body.get("rif", 1.0),
                    start_time_s=body.get("start_time_s", 0.0),
                    stop_time_s=body.get("stop_time_s"),
                )
            )
    if scenario_body is None:
        raise ParseError(f"{source} has no [scenario] section")
    scenario = Scenario(
        name=scenario_body["name"],
        sim_duration_s=scenario_body["sim_duration_s"],
        links=links,
        switches=switches,
        vcs=vcs,
        nrm=scenario_body.get("nrm", 32),
        interval_cells=scenario_body.get("interval_cells", 100),
        interval_max_s=scenario_body.get("interval_max_s", 0.001),
    )
    validate_scenario(scenario)
    return scenario


def render_scenario(scenario: Scenario) -> str:
    """Emit canonical scenario text; parse_scenario(render_scenario(s)) == s."""
    out = ["[scenario]"]
    out.append(f"name = {scenario.name}")
    out.append(f"sim_duration_s = {scenario.sim_duration_s!r}")
    out.append(f"nrm = {scenario.nrm}")
    out.append(f"interval_cells = {scenario.interval_cells}")
    out.append(f"interval_max_s = {scenario.interval_max_s!r}")
    for link in scenario.links:
        out.append("")
        out.append(f"[link {link.link_id}]")
        out.append(f"from = {link.from_node}")
        out.append(f"to = {link.to_node}")
        out.append(f"bandwidth_mbps = {link.bandwidth_mbps!r}")
        out.append(f"length_km = {link.length_km!r}")
    for sw in scenario.switches:
        out.append("")
        out.append(f"[switch {sw.switch_id}]")
        out.append(f"algorithm = {sw.algorithm}")
        out.append(f"target_utilization = {sw.target_utilization!r}")
        out.append(f"delta = {sw.delta!r}")
        out.append(f"vbr_cbr_mbps = {sw.vbr_cbr_mbps!r}")
    for vc in scenario.vcs:
        out.append("")
        out.append(f"[vc {vc.vc_id}]")
        out.append(f"route = {' '.join(vc.route)}")
        out.append(f"icr_mbps = {vc.icr_mbps!r}")
        out.append(f"pcr_mbps = {vc.pcr_mbps!r}")
        if vc.app_cap_mbps is not None:
            out.append(f"app_cap_mbps = {vc.app_cap_mbps!r}")
        out.append(f"rif = {vc.rif!r}")
        out.append(f"start_time_s = {vc.start_time_s!r}")
        if vc.stop_time_s is not None:
            out.append(f"stop_time_s = {vc.stop_time_s!r}")
    return "\n".join(out) + "\n"


def validate_scenario(scenario: Scenario) -> None:
    """Structural checks; raises ValidationError naming the violated rule."""

    def bad(rule: str) -> ValidationError:
        return ValidationError(rule)

    if scenario.sim_duration_s <= 0:
        raise bad(f"sim_duration_s must be positive, got {scenario.sim_duration_s}")
    if scenario.nrm < 2:
        raise bad(f"nrm must be at least 2, got {scenario.nrm}")
    if scenario.interval_cells < 1:
        raise bad(f"interval_cells must be at least 1, got {scenario.interval_cells}")
    if scenario.interval_max_s <= 0:
        raise bad(f"interval_max_s must be positive, got {scenario.interval_max_s}")

    switch_ids = set()
    for sw in scenario.switches:
        if sw.switch_id in switch_ids:
            raise bad(f"duplicate switch id {sw.switch_id!r}")
        switch_ids.add(sw.switch_id)
        if sw.algorithm not in ALGORITHMS:
            raise bad(
                f"switch {sw.switch_id!r}: unknown algorithm {sw.algorithm!r}; "
                f"expected one of {', '.join(ALGORITHMS)}"
            )
        if not 0.0 < sw.target_utilization <= 1.0:
            raise bad(
                f"switch {sw.switch_id!r}: target_utilization must be in (0, 1], "
                f"got {sw.target_utilization}"
            )
        if sw.delta < 0:
            raise bad(f"switch {sw.switch_id!r}: delta must be >= 0, got {sw.delta}")
        if sw.vbr_cbr_mbps < 0:
            raise bad(f"switch {sw.switch_id!r}: vbr_cbr_mbps must be >= 0")

    link_ids = set()
    by_pair: dict[frozenset, str] = {}
    links_by_id: dict[str, LinkDef] = {}
    for link in scenario.links:
        if link.link_id in link_ids:
            raise bad(f"duplicate link id {link.link_id!r}")
        link_ids.add(link.link_id)
        links_by_id[link.link_id] = link
        if link.bandwidth_mbps <= 0:
            raise bad(f"link {link.link_id!r}: bandwidth_mbps must be positive")
        if link.length_km < 0:
            raise bad(f"link {link.link_id!r}: length_km must be >= 0")
        if link.from_node == link.to_node:
            raise bad(f"link {link.link_id!r}: endpoints must differ")
        pair = frozenset((link.from_node, link.to_node))
        if pair in by_pair:
            raise bad(
                f"links {by_pair[pair]!r} and {link.link_id!r} join the same node pair; "
                "routes would be ambiguous"
            )
        by_pair[pair] = link.link_id

    vc_ids = set()
    for vc in scenario.vcs:
        if vc.vc_id in vc_ids:
            raise bad(f"duplicate vc id {vc.vc_id!r}")
        vc_ids.add(vc.vc_id)
        if len(vc.route) < 3:
            raise bad(f"vc {vc.vc_id!r}: route needs source, switches and destination")
        if len(set(vc.route)) != len(vc.route):
            raise bad(f"vc {vc.vc_id!r}: route has a loop")
        if vc.route[0] in switch_ids or vc.route[-1] in switch_ids:
            raise bad(f"vc {vc.vc_id!r}: route endpoints must be hosts, not switches")
        for node in vc.route[1:-1]:
            if node not in switch_ids:
                raise bad(f"vc {vc.vc_id!r}: route passes through undeclared switch {node!r}")
        hop_links = []
        for a, b in zip(vc.route, vc.route[1:]):
            pair = frozenset((a, b))
            if pair not in by_pair:
                raise bad(f"vc {vc.vc_id!r}: no declared link joins {a!r} and {b!r}")
            hop_links.append(by_pair[pair])
        if vc.icr_mbps <= 0:
            raise bad(f"vc {vc.vc_id!r}: icr_mbps must be positive")
        if vc.pcr_mbps < vc.icr_mbps:
            raise bad(f"vc {vc.vc_id!r}: icr_mbps exceeds pcr_mbps")
        access = links_by_id[hop_links[0]]
        if vc.pcr_mbps > access.bandwidth_mbps:
            raise bad(
                f"vc {vc.vc_id!r}: pcr_mbps exceeds the access link bandwidth "
                f"({access.bandwidth_mbps}); host queueing is not modeled"
            )
        if vc.app_cap_mbps is not None and vc.app_cap_mbps <= 0:
            raise bad(f"vc {vc.vc_id!r}: app_cap_mbps must be positive")
        if not 0.0 < vc.rif <= 1.0:
            raise bad(f"vc {vc.vc_id!r}: rif must be in (0, 1]")
        if vc.start_time_s < 0:
            raise bad(f"vc {vc.vc_id!r}: start_time_s must be >= 0")
        if vc.start_time_s >= scenario.sim_duration_s:
            raise bad(f"vc {vc.vc_id!r}: start_time_s is past the end of the simulation")
        if vc.stop_time_s is not None and vc.stop_time_s <= vc.start_time_s:
            raise bad(f"vc {vc.vc_id!r}: stop_time_s must be after start_time_s")
    if not scenario.vcs:
        raise bad("scenario declares no VCs")


def route_links(scenario: Scenario, vc: VcDef) -> list[LinkDef]:
    """The links a VC's route crosses, in travel order."""
    by_pair = {frozenset((l.from_node, l.to_node)): l for l in scenario.links}
    return [by_pair[frozenset((a, b))] for a, b in zip(vc.route, vc.route[1:])]


def vc_rtt_s(scenario: Scenario, vc_id: str) -> float:
    """Nominal round-trip time: two-way propagation along the route."""
    vc = next(v for v in scenario.vcs if v.vc_id == vc_id)
    one_way = sum(l.length_km * PROP_DELAY_S_PER_KM for l in route_links(scenario, vc))
    return 2.0 * one_way


def to_allocation_problem(scenario: Scenario) -> AllocationProblem:
    """Max-min problem induced by the scenario, on ABR capacities.

    Each directed link traversal becomes a problem link named `node/link`:
    switch-side at the switch's utilization-scaled ABR capacity, host-side at
    raw bandwidth (no feedback port paces a host).  Source app caps become
    flow caps.
    """
    switches = {sw.switch_id: sw for sw in scenario.switches}
    link_caps: dict[str, float] = {}
    flows = []
    for vc in scenario.vcs:
        hop_ids = []
        for node, link in zip(vc.route, route_links(scenario, vc)):
            key = f"{node}/{link.link_id}"
            if node in switches:
                sw = switches[node]
                cap = max(
                    0.0,
                    sw.target_utilization * link.bandwidth_mbps - sw.vbr_cbr_mbps,
                )
            else:
                cap = link.bandwidth_mbps
            link_caps[key] = cap
            hop_ids.append(key)
        cap_limit = vc.app_cap_mbps
        flows.append(Flow(flow_id=vc.vc_id, route=tuple(hop_ids), source_cap=cap_limit))
    links = sorted(link_caps.items())
    return AllocationProblem(links=list(links), flows=flows)


def with_algorithm(scenario: Scenario, algorithm: str) -> Scenario:
    """Copy of the scenario with every switch running the given algorithm."""
    if algorithm not in ALGORITHMS:
        raise ValidationError(
            f"unknown algorithm {algorithm!r}; expected one of {', '.join(ALGORITHMS)}"
        )
    switches = [replace(sw, algorithm=algorithm) for sw in scenario.switches]
    return replace(scenario, switches=switches)


def builtin(name: str) -> Scenario:
    """Load a packaged scenario: 'fig2' (two-hop, 17 VCs) or 'fig3' (three sources)."""
    key = re.sub(r"[^a-z0-9]", "", name.lower())
    aliases = {
        "fig2": "fig2",
        "fig2upstream": "fig2",
        "fig3": "fig3",
        "fig3threesource": "fig3",
    }
    if key not in aliases:
        raise ValidationError(f"unknown builtin scenario {name!r}; have fig2, fig3")
    fname = f"{aliases[key]}.scn"
    text = resources.files(__package__).joinpath("data").joinpath(fname).read_text()
    return parse_scenario(text, source=fname)
