"""Per-interval explicit-rate computation for the ERICA family of switch algorithms.

Everything here is a pure function of its inputs.  A switch port feeds one
IntervalMeasurement per measurement interval into one of the er_* variants and
gets back an ErDecision: the ER value to stamp on each VC's backward RM cells
until the next interval closes.  The fixed-point solver and the closed form at
the bottom predict where the recursive fair-share iteration lands, and back the
oracle checks in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Iterable, Sequence

from .errors import (
    AllUnderloading,
    CapacityZero,
    MissingRate,
    NoActiveVcs,
    NoConvergence,
)

# Below this fair share (Mbps) the activity ratio is meaningless; treat the VC
# as fully active rather than divide by ~0.
FAIR_SHARE_EPS = 1e-9

# Lower clamp on the effective VC count so fair_share = capacity / n_eff stays
# finite on intervals where nothing was seen.
N_EFF_FLOOR = 1e-6

# Fixed-point solver defaults: relative step tolerance and iteration budget.
FP_TOL = 1e-9
FP_MAX_ITERS = 10**6


@dataclass(frozen=True)
class VcObservation:
    """What one port learned about one VC during one measurement interval.

    ccr_from_rm is the most recent CCR field read from a forward RM cell and
    carries over from earlier intervals; measured_rate is filled only when the
    port measures per-VC rates itself.  Either may be None.
    """

    vc_id: Hashable
    ccr_from_rm: float | None = None
    measured_rate: float | None = None
    saw_cell: bool = False


@dataclass(frozen=True)
class IntervalMeasurement:
    """Aggregate and per-VC numbers for one closed measurement interval."""

    abr_input_rate: float
    link_bandwidth: float
    target_utilization: float
    vbr_cbr_usage: float = 0.0
    per_vc: tuple[VcObservation, ...] = ()


@dataclass
class AllocatorState:
    """Mutable per-port state the variants carry between intervals."""

    fair_share_prev: float = 0.0
    max_alloc_previous: float = 0.0
    n_eff_prev: float = 0.0
    delta: float = 0.1


class RateSource(Enum):
    """Where er_neff reads each VC's current source rate from."""

    CCR_FROM_RM = "ccr-from-rm"
    MEASURED_AT_SWITCH = "measured-at-switch"


@dataclass(frozen=True)
class ErDecision:
    """One interval's output: the ER table plus the numbers behind it.

    max_allocation is the largest ER granted this interval; a caller running
    er_maxalloc stores it back as AllocatorState.max_alloc_previous.
    """

    per_vc_er: dict[Hashable, float]
    fair_share: float
    load_factor: float
    n_eff: float
    abr_capacity: float
    max_allocation: float


def compute_abr_capacity(
    link_bandwidth: float, target_utilization: float, vbr_cbr_usage: float = 0.0
) -> float:
    """Bandwidth left for ABR traffic: utilization-scaled line rate minus VBR/CBR load."""
    if not math.isfinite(link_bandwidth) or link_bandwidth < 0:
        raise ValueError(f"link_bandwidth must be finite and >= 0, got {link_bandwidth}")
    if not 0.0 < target_utilization <= 1.0:
        raise ValueError(f"target_utilization must be in (0, 1], got {target_utilization}")
    if not math.isfinite(vbr_cbr_usage) or vbr_cbr_usage < 0:
        raise ValueError(f"vbr_cbr_usage must be finite and >= 0, got {vbr_cbr_usage}")
    return max(0.0, target_utilization * link_bandwidth - vbr_cbr_usage)


def compute_load_factor(abr_input_rate: float, abr_capacity: float) -> float:
    """Overload factor z: measured ABR input rate over ABR capacity."""
    if abr_capacity <= 0.0:
        raise CapacityZero(f"abr_capacity must be positive, got {abr_capacity}")
    if not math.isfinite(abr_input_rate) or abr_input_rate < 0:
        raise ValueError(f"abr_input_rate must be finite and >= 0, got {abr_input_rate}")
    return abr_input_rate / abr_capacity


def count_active_simple(observations: Iterable[VcObservation]) -> int:
    """Number of VCs that sent at least one cell; never 0, so shares stay finite."""
    n = sum(1 for ob in observations if ob.saw_cell)
    return n if n > 0 else 1


def activity_level(source_rate: float, fair_share: float) -> float:
    """Fraction of one fair share this source actually uses, capped at 1."""
    if not math.isfinite(source_rate) or source_rate < 0:
        raise ValueError(f"source_rate must be finite and >= 0, got {source_rate}")
    if fair_share <= FAIR_SHARE_EPS:
        return 1.0
    ratio = source_rate / fair_share
    return ratio if ratio < 1.0 else 1.0


def effective_active_vcs(source_rates: Iterable[float], fair_share: float) -> float:
    """Sum of activity levels: underloading sources count fractionally."""
    return float(sum(activity_level(r, fair_share) for r in source_rates))


def fair_share_neff(abr_capacity: float, n_eff: float) -> float:
    """Capacity divided by the effective VC count."""
    if n_eff <= 0.0:
        raise NoActiveVcs(f"n_eff must be positive, got {n_eff}")
    return abr_capacity / n_eff


def _er_table(
    pairs: Sequence[tuple[Hashable, float]],
    fair_share: float,
    load_factor: float,
    capacity: float,
    floor: float = 0.0,
) -> dict[Hashable, float]:
    # At z = 0 the VCShare r/z is taken as +inf; the capacity clamp resolves it.
    ers = {}
    for vc_id, rate in pairs:
        share = rate / load_factor if load_factor > 0.0 else math.inf
        er = fair_share
        if share > er:
            er = share
        if floor > er:
            er = floor
        if er > capacity:
            er = capacity
        ers[vc_id] = er
    return ers


def _decision(
    pairs: Sequence[tuple[Hashable, float]],
    fair_share: float,
    load_factor: float,
    capacity: float,
    n_eff: float,
    floor: float = 0.0,
) -> ErDecision:
    ers = _er_table(pairs, fair_share, load_factor, capacity, floor)
    max_alloc = max(ers.values()) if ers else 0.0
    return ErDecision(ers, fair_share, load_factor, n_eff, capacity, max_alloc)


def _ccr_pairs(meas: IntervalMeasurement) -> list[tuple[Hashable, float]]:
    # A VC that never declared a CCR contributes VCShare 0 and falls back to
    # the fair share.
    return [
        (ob.vc_id, ob.ccr_from_rm if ob.ccr_from_rm is not None else 0.0)
        for ob in meas.per_vc
    ]


def er_original(meas: IntervalMeasurement, state: AllocatorState) -> ErDecision:
    """Baseline ERICA: ER = min(max(FairShare, CCR/z), capacity) per VC.

    FairShare divides capacity by the plain active-VC count; state is unused
    but accepted so all variants share a call shape.
    """
    capacity = compute_abr_capacity(
        meas.link_bandwidth, meas.target_utilization, meas.vbr_cbr_usage
    )
    z = compute_load_factor(meas.abr_input_rate, capacity)
    n = count_active_simple(meas.per_vc)
    fair_share = capacity / n
    return _decision(_ccr_pairs(meas), fair_share, z, capacity, float(n))


def er_maxalloc(meas: IntervalMeasurement, state: AllocatorState) -> ErDecision:
    """ERICA with the max-allocation fairness step.

    In overload (z > 1 + delta) this is er_original.  Near or below unit load
    every VC is additionally lifted to the largest allocation granted in the
    previous interval, so sources whose CCR stalled at distinct values get
    pulled to a common level.  The caller stores decision.max_allocation back
    into state.max_alloc_previous.
    """
    capacity = compute_abr_capacity(
        meas.link_bandwidth, meas.target_utilization, meas.vbr_cbr_usage
    )
    z = compute_load_factor(meas.abr_input_rate, capacity)
    n = count_active_simple(meas.per_vc)
    fair_share = capacity / n
    floor = state.max_alloc_previous if z <= 1.0 + state.delta else 0.0
    return _decision(_ccr_pairs(meas), fair_share, z, capacity, float(n), floor)


def er_neff(
    meas: IntervalMeasurement, state: AllocatorState, rate_source: RateSource
) -> ErDecision:
    """ERICA with fractional activity: FairShare = capacity / n_eff.

    Each VC's activity is min(1, rate / previous fair share); the sum replaces
    the plain active count.  One iteration per interval: the caller stores
    decision.fair_share back into state.fair_share_prev.  rate_source selects
    whether rates come from declared CCR fields or from switch measurement.
    """
    capacity = compute_abr_capacity(
        meas.link_bandwidth, meas.target_utilization, meas.vbr_cbr_usage
    )
    z = compute_load_factor(meas.abr_input_rate, capacity)
    if rate_source is RateSource.MEASURED_AT_SWITCH:
        pairs = []
        for ob in meas.per_vc:
            if ob.measured_rate is None:
                raise MissingRate(f"vc {ob.vc_id!r} has no measured rate")
            pairs.append((ob.vc_id, ob.measured_rate))
    else:
        pairs = _ccr_pairs(meas)
    n_eff = effective_active_vcs((r for _, r in pairs), state.fair_share_prev)
    if n_eff < N_EFF_FLOOR:
        n_eff = N_EFF_FLOOR
    fair_share = capacity / n_eff
    return _decision(pairs, fair_share, z, capacity, n_eff)


def solve_fairshare_fixed_point(
    capacity: float,
    source_caps: Sequence[float | None],
    tol: float = FP_TOL,
    max_iters: int = FP_MAX_ITERS,
) -> tuple[float, list[float], float]:
    """Iterate fair_share <- capacity / n_eff(fair_share) to convergence.

    source_caps lists each VC's own rate limit, None for unlimited.  Returns
    (fair_share, per-VC allocations, n_eff) at the fixed point, where each
    allocation is min(cap, fair_share).  Raises NoConvergence when no fixed
    point exists (every source capped and the caps cannot saturate the link)
    or the iteration budget runs out.
    """
    caps = list(source_caps)
    if capacity <= 0 or not math.isfinite(capacity):
        raise ValueError(f"capacity must be positive and finite, got {capacity}")
    if not caps:
        raise ValueError("source_caps must be non-empty")
    for c in caps:
        if c is not None and (not math.isfinite(c) or c <= 0):
            raise ValueError(f"source caps must be positive or None, got {c}")
    finite = [c for c in caps if c is not None]
    if len(finite) == len(caps) and sum(finite) <= capacity * (1.0 - tol):
        raise NoConvergence(
            "every source is capped and the caps sum below capacity; "
            "the link cannot saturate and the share diverges"
        )
    fair_share = capacity / len(caps)
    for _ in range(max_iters):
        n_eff = 0.0
        for c in caps:
            used = fair_share if c is None or c > fair_share else c
            n_eff += used / fair_share
        new = capacity / n_eff
        done = abs(new - fair_share) <= tol * fair_share
        fair_share = new
        if done:
            break
    else:
        raise NoConvergence(f"no fixed point within {max_iters} iterations")
    # Polish: with the under/over partition frozen the fixed point is exact,
    # so jump to it and repeat until the partition stops moving (at most one
    # jump per cap).  The plain iteration converges only linearly, which can
    # leave a residual on the order of tol itself.
    for _ in range(len(caps) + 1):
        under = [c for c in caps if c is not None and c < fair_share]
        n_over = len(caps) - len(under)
        if n_over == 0:
            break
        exact = (capacity - math.fsum(under)) / n_over
        if exact == fair_share:
            break
        fair_share = exact
    allocations = [fair_share if c is None or c > fair_share else c for c in caps]
    n_eff = sum(a / fair_share for a in allocations)
    return fair_share, allocations, n_eff


def mit_closed_form(
    capacity: float, underloading_rates: Sequence[float], n_total: int
) -> float:
    """Closed-form share: leftover capacity split among non-underloading VCs.

    underloading_rates lists the rates of VCs stuck below the share; the other
    n_total - len(underloading_rates) VCs divide what remains.  Agrees with the
    fixed point of solve_fairshare_fixed_point on a consistent partition.
    """
    n_under = len(underloading_rates)
    if n_total < n_under:
        raise ValueError(f"n_total {n_total} smaller than underloading count {n_under}")
    if n_total == n_under:
        raise AllUnderloading("every VC is underloading; no one takes the residual share")
    total_under = math.fsum(underloading_rates)
    if total_under >= capacity:
        raise ValueError(
            f"underloading rates ({total_under}) exhaust capacity ({capacity})"
        )
    return (capacity - total_under) / (n_total - n_under)
