"""Fixtures: one simulated CSV tree per session, plus the acceptance line."""

import subprocess
import sys

import pytest

ALGORITHMS = (
    "erica-original",
    "erica-maxalloc",
    "erica-neff-ccr",
    "erica-neff-measured",
)


@pytest.fixture(scope="session")
def runs_dir(tmp_path_factory):
    """Four 400 ms traces of the three-source scenario, one per algorithm."""
    out = tmp_path_factory.mktemp("runs")
    args = [sys.executable, "-m", "abrsim", "compare", "--builtin", "fig3",
            "--out", str(out), "--duration", "0.4"]
    for alg in ALGORITHMS:
        args += ["--alg", alg]
    proc = subprocess.run(args, capture_output=True, text=True, timeout=600)
    assert proc.returncode == 0, proc.stderr
    return out


_ACCEPTANCE = []


def record_acceptance(criterion, ok, detail):
    _ACCEPTANCE.append((criterion, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in sorted(_ACCEPTANCE):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"{status}  {criterion}: {detail}")
