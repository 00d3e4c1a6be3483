import numpy as np
import pytest

from mechfinder.datagen import case


@pytest.fixture(scope="session")
def hyp():
    return case("hypothetical")


@pytest.fixture(scope="session")
def aldol():
    return case("aldol")


@pytest.fixture(scope="session")
def fructose():
    return case("fructose")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one pass/fail line per acceptance criterion, aggregated over its test items
_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_ac"):
        return
    crit = int(name[len("test_ac"):].split("_")[0])
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        _CRITERIA.setdefault(crit, []).append(not failed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    from test_acceptance import CRITERIA, DETAILS

    terminalreporter.section("acceptance criteria")
    for crit in sorted(_CRITERIA):
        ok = all(_CRITERIA[crit])
        terminalreporter.write_line("AC%d %s  %s" % (crit, "PASS" if ok else "FAIL", CRITERIA.get(crit, "")))
    for line in DETAILS:
        terminalreporter.write_line("  " + line)
