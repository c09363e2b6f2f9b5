"""Shared pytest hooks: prints one PASS/FAIL line per acceptance
criterion after the run, pulling measured details recorded by the
acceptance tests."""

import re

ACCEPTANCE_FILE = "test_acceptance.py"

# criterion id -> free-form detail string, filled by test_acceptance
ACCEPTANCE_DETAILS = {}

_outcomes = {}


def record_detail(criterion, text):
    ACCEPTANCE_DETAILS[criterion] = text


def _criterion_of(nodeid):
    match = re.search(r"test_criterion_(\d+)", nodeid)
    return int(match.group(1)) if match else None


def pytest_runtest_logreport(report):
    if ACCEPTANCE_FILE not in report.nodeid:
        return
    crit = _criterion_of(report.nodeid)
    if crit is None:
        return
    if report.when == "call":
        _outcomes[crit] = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    elif report.failed:
        _outcomes[crit] = "ERROR"
    elif report.skipped:
        _outcomes.setdefault(crit, "SKIP")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for crit in sorted(_outcomes):
        detail = ACCEPTANCE_DETAILS.get(crit, "")
        suffix = f" [{detail}]" if detail else ""
        terminalreporter.write_line(f"criterion {crit:2d}: {_outcomes[crit]}{suffix}")
