import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        key = (mark.kwargs["criterion"], mark.kwargs["title"])
        _acceptance.setdefault(key, []).append(rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for (num, title), results in sorted(_acceptance.items()):
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d} {status}  {title}")
