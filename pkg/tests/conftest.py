"""Shared fixtures and the acceptance-criteria terminal summary."""

from __future__ import annotations

import pytest

from explaineval.recommender import build_artifacts, scaled_config
from explaineval.simulate import synthetic_dataset


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): acceptance criterion this test belongs to"
    )


@pytest.fixture(scope="session")
def synthetic_ds():
    """The 50-movie / 30-user structured random dataset."""
    return synthetic_dataset(seed=42)


@pytest.fixture(scope="session")
def synthetic_artifacts(synthetic_ds):
    return build_artifacts(synthetic_ds, scaled_config(synthetic_ds))


# --- acceptance summary -----------------------------------------------------
#
# Tests in test_acceptance.py carry a `criterion` marker.  One line per
# criterion is printed at the end of the run; a criterion counts as PASS
# only if every one of its tests passed.  Expected failures are listed
# explicitly so known-infeasible cases stay visible.

_results: dict[str, dict[str, int]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    bucket = _results.setdefault(name, {"passed": 0, "failed": 0, "xfailed": 0})
    if hasattr(report, "wasxfail"):
        bucket["xfailed"] += 1
    elif report.passed:
        bucket["passed"] += 1
    elif report.failed:
        bucket["failed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria")
    terminalreporter.write_line("-------------------")
    for name, bucket in _results.items():
        if bucket["failed"]:
            status = "FAIL"
        elif bucket["xfailed"]:
            status = "PASS*"
        else:
            status = "PASS"
        detail = f"{bucket['passed']} passed"
        if bucket["failed"]:
            detail += f", {bucket['failed']} failed"
        if bucket["xfailed"]:
            detail += f", {bucket['xfailed']} expected-failure (known data defect)"
        terminalreporter.write_line(f"  {status:5s} {name} ({detail})")
