import pytest

import cpsrisk
from cpsrisk import parse_model
from cpsrisk.dynamics import classify_modes


@pytest.fixture(scope="session")
def bundle():
    return parse_model(cpsrisk.data_path("cstr.model"))


@pytest.fixture(scope="session")
def system(bundle):
    return bundle.system()


@pytest.fixture(scope="session")
def verdicts(bundle, system):
    return classify_modes(system, bundle.envelope, 120.0, 0.01)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
