import numpy as np
import pytest

from qworkscope.spin import SpinParams, spin_protocol, spin_snapshot

FIG2_DURATIONS = (0.01, 1.0, 100.0)

# filled by test_acceptance; printed at the end of the run
ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture(scope="session")
def fig2_params():
    return {tp: SpinParams(nu0=1.0, nuT=1.8, tPrime=tp, beta=0.01, sigma=1.0) for tp in FIG2_DURATIONS}


@pytest.fixture(scope="session")
def fig2_snapshots(fig2_params):
    """Coherent-Gibbs snapshots for the three reference durations."""
    return {tp: spin_snapshot(p, "coherent-gibbs") for tp, p in fig2_params.items()}


@pytest.fixture(scope="session")
def fig2_thermal(fig2_snapshots, fig2_params):
    return {tp: spin_snapshot(fig2_params[tp], "thermal", propagator=s.propagator) for tp, s in fig2_snapshots.items()}


@pytest.fixture(scope="session")
def fig2_protocols(fig2_params):
    return {tp: spin_protocol(p) for tp, p in fig2_params.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (int(k.split()[0]), k)):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")


@pytest.fixture
def record():
    """Store ``(ok, detail)`` for an acceptance criterion; shown in the terminal summary."""

    def _record(key: str, ok: bool, detail: str) -> bool:
        ACCEPTANCE_RESULTS[key] = (bool(ok), detail)
        return bool(ok)

    return _record
