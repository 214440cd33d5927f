import re

import pytest

from braidflow.scenarios import load_scenario, perturbation_sweep, run_scenario

_CRITERIA = {}


@pytest.fixture(scope="session")
def paper_cfg():
    return load_scenario("paper-disk")


@pytest.fixture(scope="session")
def paper_result(paper_cfg):
    return run_scenario(paper_cfg)


@pytest.fixture(scope="session")
def paper_sweep(paper_cfg, paper_result):
    # 0.05 lies above the bracketed breaking amplitude (about 0.042 to 0.044)
    return perturbation_sweep(paper_cfg, [0.0, 1e-4, 1e-3, 0.05], base=paper_result)


@pytest.fixture(scope="session")
def identity_result():
    return run_scenario(load_scenario("identity"))


@pytest.fixture(scope="session")
def single_result():
    return run_scenario(load_scenario("single-rotation"))


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2))
    if report.when == "call" or report.outcome != "passed":
        prev = _CRITERIA.get(key)
        if prev is None or prev == "PASS":
            _CRITERIA[key] = "PASS" if report.outcome == "passed" else report.outcome.upper()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (n, name), status in sorted(_CRITERIA.items()):
        status = "FAIL" if status == "FAILED" else status
        terminalreporter.write_line(f"criterion {n:2d} {name.replace('_', ' '):<40s} {status}")
