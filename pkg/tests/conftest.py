import numpy as np
import pytest

from sqzspec.channels import AggregateSqueezing

_ACCEPTANCE: dict[str, tuple[int, str, bool, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = dict(item.user_properties).get("detail", "")
        _ACCEPTANCE[item.nodeid] = (marker.kwargs["criterion"], marker.kwargs.get("title", item.name),
                                    rep.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, title, ok, detail in sorted(_ACCEPTANCE.values()):
        line = f"criterion {number:2d}  {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def fig1_target():
    return AggregateSqueezing.from_ratio(0.25, 0.75)


@pytest.fixture
def fig3_target():
    return AggregateSqueezing.from_ratio(5.0, 0.98)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)

