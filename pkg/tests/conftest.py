import pytest
from threadpoolctl import threadpool_limits

# Acceptance findings are collected here and echoed after the run so the
# per-criterion verdicts survive pytest's output capture.
ACCEPTANCE_LOG = []


@pytest.fixture(scope="session", autouse=True)
def single_threaded_blas():
    """Pin BLAS/LAPACK to one thread for the whole session.

    Every determinism contract in the package (bit-identical reruns,
    block-size independence) is stated for single-threaded kernels, and the
    test matrices are small enough that threading would not pay anyway.
    """
    with threadpool_limits(limits=1):
        yield


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in ACCEPTANCE_LOG:
        terminalreporter.write_line(line)
