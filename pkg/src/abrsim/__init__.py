"""Explicit-rate flow control: allocation algorithms, max-min oracle, simulator.

The pieces compose bottom-up: ratealloc holds the per-interval explicit-rate
algorithms, maxmin the global water-filling oracle and verifier, scenarios
the topology format and builtins, simcore the cell-level event simulator,
metrics the traces/summaries/CSV layer, and cli the command line front end.
"""

from .errors import (
    AbrsimError,
    AllUnderloading,
    AllZero,
    CapacityZero,
    EmptyWindow,
    InvalidTopology,
    MissingRate,
    NoActiveVcs,
    NoConvergence,
    ParseError,
    ScenarioInvalid,
    UnknownFlow,
    ValidationError,
)
from .maxmin import (
    AllocationProblem,
    AllocationResult,
    Flow,
    VerifyResult,
    single_link_problem,
    solve_maxmin,
    verify_maxmin,
)
from .metrics import (
    AcrSample,
    PortSample,
    RunStats,
    SteadySummary,
    TraceSet,
    bottleneck_port,
    jain_fairness_index,
    read_csv,
    steady_state_summary,
    write_csv,
)
from .ratealloc import (
    AllocatorState,
    ErDecision,
    IntervalMeasurement,
    RateSource,
    VcObservation,
    activity_level,
    compute_abr_capacity,
    compute_load_factor,
    count_active_simple,
    effective_active_vcs,
    er_maxalloc,
    er_neff,
    er_original,
    fair_share_neff,
    mit_closed_form,
    solve_fairshare_fixed_point,
)
from .scenarios import (
    ALGORITHMS,
    LinkDef,
    Scenario,
    SwitchDef,
    VcDef,
    builtin,
    parse_scenario,
    render_scenario,
    to_allocation_problem,
    validate_scenario,
    vc_rtt_s,
    with_algorithm,
)
from .simcore import CELL_BITS, CELL_BYTES, Simulator, apply_brm_acr, run

__version__ = "0.1.0"
