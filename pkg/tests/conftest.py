import re
import warnings

import numpy as np
import pytest

from bomilearn.dynamics import ModelParams
from bomilearn.protocol import ExperimentConfig, run_experiment
from bomilearn.synergy import default_mapping

_CRITERIA: dict = {}


@pytest.fixture(scope="session")
def mapping():
    return default_mapping(seed=0)


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def default_records(mapping, params):
    return run_experiment(ExperimentConfig(), mapping, params)


@pytest.fixture
def small_cfg():
    return ExperimentConfig(n_sessions=2, trials_per_session=6)


def quiet_params(**kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ModelParams(**kw)


def rng(seed=0):
    return np.random.default_rng(seed)


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_c(\d+)_", report.nodeid)
    if not m or report.when not in ("setup", "call"):
        return
    n = int(m.group(1))
    ok = report.passed if report.when == "call" else not report.failed
    _CRITERIA.setdefault(n, []).append((report.nodeid.split("::")[-1], ok))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        status = "PASS" if all(ok for _, ok in results) else "FAIL"
        failed = [name for name, ok in results if not ok]
        detail = f"  (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {n}: {status}{detail}")
