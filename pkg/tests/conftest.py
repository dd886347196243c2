"""Acceptance reporting: every test marked ``criterion(n)`` (and every test in
the module-level property suites, which count toward criterion 8) feeds one
PASS/FAIL line per criterion in the terminal summary."""

from collections import defaultdict

import pytest

CRITERIA = {
    1: "AWGN oracle",
    2: "Rayleigh oracle",
    3: "destination immunity (bit-exact)",
    4: "CP-absorption boundary (bit-exact)",
    5: "relay-position sweep, qualitative shape",
    6: "jamming-power trend with calibrated target",
    7: "CP-length insensitivity",
    8: "property suite",
}
PROPERTY_MODULES = {"test_dsp", "test_channel", "test_protocol", "test_montecarlo", "test_config_cli"}

_criterion_of = {}
_outcomes = defaultdict(dict)
_notes = defaultdict(list)


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _criterion_of[item.nodeid] = m.args[0]
        elif item.module.__name__.rsplit(".", 1)[-1] in PROPERTY_MODULES:
            _criterion_of[item.nodeid] = 8


def pytest_runtest_logreport(report):
    n = _criterion_of.get(report.nodeid)
    if n is None:
        return
    prev = _outcomes[n].get(report.nodeid)
    if report.failed:
        _outcomes[n][report.nodeid] = "failed"
    elif report.when == "call" and prev != "failed":
        _outcomes[n][report.nodeid] = "skipped" if report.skipped else "passed"
    elif report.skipped and prev is None:
        _outcomes[n][report.nodeid] = "skipped"


@pytest.fixture
def note(request):
    """Attach a measurement line to the test's criterion in the summary."""
    n = _criterion_of.get(request.node.nodeid)

    def add(text):
        if n is not None:
            _notes[n].append(text)

    return add


def pytest_terminal_summary(terminalreporter):
    if not _criterion_of:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = list(_outcomes[n].values())
        if not results:
            tr.write_line(f"criterion {n} [{title}]: NOT RUN")
            continue
        failed = results.count("failed")
        passed = results.count("passed")
        verdict = "FAIL" if failed else ("PASS" if passed else "SKIPPED")
        tr.write_line(f"criterion {n} [{title}]: {verdict} ({passed} passed, {failed} failed)")
        for line in _notes[n]:
            tr.write_line(f"    {line}")
