"""Shared fixtures: memoized simulation runs and the acceptance report.

The long runs (400 ms fig3 under each algorithm, 600 ms fig2) dominate suite
runtime, so they are computed once per session and shared by every test that
needs them.  Acceptance tests record one line each; the summary hook prints
the table after the normal pytest output.
"""

import dataclasses

import pytest

from abrsim import Simulator, builtin, with_algorithm

_RUNS = {}


def run_cached(name, algorithm, duration):
    key = (name, algorithm, duration)
    if key not in _RUNS:
        sc = with_algorithm(builtin(name), algorithm)
        sc = dataclasses.replace(sc, sim_duration_s=duration)
        _RUNS[key] = Simulator(sc).run()
    return _RUNS[key]


@pytest.fixture(scope="session")
def fig3_trace():
    """Callable: fig3_trace(algorithm) -> 400 ms fig3 TraceSet, cached."""

    def get(algorithm, duration=0.4):
        return run_cached("fig3", algorithm, duration)

    return get


@pytest.fixture(scope="session")
def fig3_short():
    """One cheap fig3 run for tests that only need a valid trace."""
    return run_cached("fig3", "erica-neff-measured", 0.08)


@pytest.fixture(scope="session")
def fig2_trace():
    return run_cached("fig2", "erica-neff-measured", 0.6)


_ACCEPTANCE = []


def record_acceptance(criterion, ok, detail):
    """Log one acceptance-criterion outcome for the end-of-run table."""
    _ACCEPTANCE.append((criterion, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in sorted(_ACCEPTANCE):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{status}  {criterion}: {detail}")
