"""Acceptance bookkeeping: one PASS/FAIL line per criterion at the end of the run."""
from collections import defaultdict

import pytest

_results = defaultdict(list)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _results[marker.args[0]].append((item.name, rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_results):
        runs = _results[num]
        ok = all(o == "passed" for _, o in runs)
        failed = [name for name, o in runs if o != "passed"]
        line = f"criterion {num}: {'PASS' if ok else 'FAIL'} ({len(runs) - len(failed)}/{len(runs)} checks)"
        if failed:
            line += " failing: " + ", ".join(failed)
        tr.write_line(line)
