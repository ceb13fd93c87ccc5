"""Global max-min fair allocation over a multi-link topology.

solve_maxmin runs progressive filling: raise every flow's rate together,
freeze the flows crossing whichever link saturates first at that link's
equal share, remove them, repeat.  A flow's own rate cap is modeled as a
single-flow pseudo-link, so "bottlenecked at the source" falls out of the
same mechanism.  verify_maxmin checks a candidate against the definition
itself and is deliberately independent of the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import InvalidTopology, UnknownFlow

# Bottleneck label for a flow frozen by its own rate cap.
SOURCE = "source"


@dataclass(frozen=True)
class Flow:
    flow_id: str
    route: tuple[str, ...]
    source_cap: float | None = None


@dataclass
class AllocationProblem:
    """Links as (link_id, capacity) pairs plus flows with routes over them."""

    links: list[tuple[str, float]] = field(default_factory=list)
    flows: list[Flow] = field(default_factory=list)


@dataclass
class AllocationResult:
    per_flow: dict[str, float]
    bottleneck_of: dict[str, str]


@dataclass
class VerifyResult:
    ok: bool
    violation: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def _validate(problem: AllocationProblem) -> dict[str, float]:
    caps: dict[str, float] = {}
    for link_id, capacity in problem.links:
        if link_id in caps:
            raise InvalidTopology(f"duplicate link id {link_id!r}")
        if not math.isfinite(capacity) or capacity <= 0:
            raise InvalidTopology(f"link {link_id!r} capacity must be positive, got {capacity}")
        caps[link_id] = capacity
    seen = set()
    for flow in problem.flows:
        if flow.flow_id in seen:
            raise InvalidTopology(f"duplicate flow id {flow.flow_id!r}")
        seen.add(flow.flow_id)
        if not flow.route:
            raise InvalidTopology(f"flow {flow.flow_id!r} has an empty route")
        if len(set(flow.route)) != len(flow.route):
            raise InvalidTopology(f"flow {flow.flow_id!r} crosses a link twice")
        for link_id in flow.route:
            if link_id not in caps:
                raise InvalidTopology(
                    f"flow {flow.flow_id!r} routes over undeclared link {link_id!r}"
                )
        if flow.source_cap is not None and (
            not math.isfinite(flow.source_cap) or flow.source_cap <= 0
        ):
            raise InvalidTopology(
                f"flow {flow.flow_id!r} source cap must be positive, got {flow.source_cap}"
            )
    return caps


def solve_maxmin(problem: AllocationProblem) -> AllocationResult:
    """Progressive filling.  Ties freeze simultaneously; result is deterministic."""
    caps = _validate(problem)
    flow_order = [f.flow_id for f in problem.flows]
    routes = {f.flow_id: f.route for f in problem.flows}

    # Constraint table: real links plus one pseudo-link per capped flow.
    remaining: dict[object, float] = dict(caps)
    members: dict[object, set[str]] = {lid: set() for lid in caps}
    constraints_of: dict[str, list[object]] = {}
    for flow in problem.flows:
        cons: list[object] = list(flow.route)
        if flow.source_cap is not None:
            key = (SOURCE, flow.flow_id)
            remaining[key] = flow.source_cap
            members[key] = set()
            cons.append(key)
        constraints_of[flow.flow_id] = cons
        for key in cons:
            members[key].add(flow.flow_id)

    per_flow: dict[str, float] = {}
    bottleneck_of: dict[str, str] = {}
    unfrozen = set(flow_order)
    while unfrozen:
        best = math.inf
        for key, mem in members.items():
            if not mem:
                continue
            share = remaining[key] / len(mem)
            if share < best:
                best = share
        tight = [key for key, mem in members.items() if mem and remaining[key] / len(mem) == best]
        frozen_now = set()
        for key in tight:
            frozen_now |= members[key]
        for fid in frozen_now:
            per_flow[fid] = best
            mine = [key for key in tight if fid in members[key]]
            if (SOURCE, fid) in mine:
                bottleneck_of[fid] = SOURCE
            else:
                bottleneck_of[fid] = min(str(key) for key in mine)
        for fid in frozen_now:
            for key in constraints_of[fid]:
                left = remaining[key] - best
                remaining[key] = left if left > 0.0 else 0.0
                members[key].discard(fid)
        unfrozen -= frozen_now

    return AllocationResult(
        per_flow={fid: per_flow[fid] for fid in flow_order},
        bottleneck_of={fid: bottleneck_of[fid] for fid in flow_order},
    )


def verify_maxmin(
    problem: AllocationProblem, candidate: dict[str, float], tol: float = 1e-9
) -> VerifyResult:
    """Check a candidate allocation for max-min fairness within tolerance.

    True iff the candidate is feasible, respects every source cap, and no flow
    could be raised without lowering a flow of equal or smaller rate: each flow
    is either at its cap or is a maximal flow on some saturated link of its
    route.  Returns the first violated condition otherwise.  tol is relative.
    """
    caps = _validate(problem)
    flow_ids = [f.flow_id for f in problem.flows]
    extraneous = sorted(set(candidate) - set(flow_ids))
    if extraneous:
        raise UnknownFlow(f"candidate names unknown flows: {', '.join(extraneous)}")
    missing = [fid for fid in flow_ids if fid not in candidate]
    if missing:
        raise ValueError(f"candidate misses flows: {', '.join(missing)}")

    for fid in flow_ids:
        if candidate[fid] < 0:
            return VerifyResult(False, f"flow {fid!r} has a negative allocation")

    load: dict[str, float] = {lid: 0.0 for lid in caps}
    on_link: dict[str, list[str]] = {lid: [] for lid in caps}
    for flow in problem.flows:
        for lid in flow.route:
            load[lid] += candidate[flow.flow_id]
            on_link[lid].append(flow.flow_id)

    for link_id, capacity in problem.links:
        if load[link_id] > capacity + tol * max(1.0, capacity):
            return VerifyResult(
                False,
                f"link {link_id!r} overloaded: {load[link_id]} > capacity {capacity}",
            )

    for flow in problem.flows:
        x = candidate[flow.flow_id]
        cap = flow.source_cap
        if cap is not None and x > cap + tol * max(1.0, cap):
            return VerifyResult(
                False, f"flow {flow.flow_id!r} exceeds its source cap: {x} > {cap}"
            )

    for flow in problem.flows:
        x = candidate[flow.flow_id]
        cap = flow.source_cap
        if cap is not None and x >= cap - tol * max(1.0, cap):
            continue  # bottlenecked at the source
        blocked = False
        for lid in flow.route:
            capacity = caps[lid]
            saturated = capacity - load[lid] <= tol * max(1.0, capacity)
            if not saturated:
                continue
            peak = max(candidate[g] for g in on_link[lid])
            if x >= peak - tol * max(1.0, peak):
                blocked = True
                break
        if not blocked:
            return VerifyResult(
                False, f"flow {flow.flow_id!r} can be increased: no binding bottleneck"
            )
    return VerifyResult(True)


def single_link_problem(
    capacity: float, source_caps: Sequence[float | None], link_id: str = "link"
) -> AllocationProblem:
    """Convenience wrapper: n flows over one shared link, with optional caps."""
    flows = [
        Flow(flow_id=f"f{i}", route=(link_id,), source_cap=c)
        for i, c in enumerate(source_caps)
    ]
    return AllocationProblem(links=[(link_id, capacity)], flows=flows)
