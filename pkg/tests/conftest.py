"""Collects acceptance-criterion outcomes and prints one line per criterion
at the end of the run."""

import re

_CRITERIA: dict[int, str] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if m:
        _CRITERIA[int(m.group(1))] = report.outcome


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for num in sorted(_CRITERIA):
        verdict = "PASS" if _CRITERIA[num] == "passed" else "FAIL"
        terminalreporter.write_line(f"  criterion {num:2d}: {verdict}")
