"""Replay acceptance-criterion verdict lines after the test run.

The acceptance tests print one ``[PASS]``/``[FAIL]`` line per criterion;
pytest's output capture hides those for passing tests, so this hook
repeats them in the terminal summary where they are always visible.
"""

import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "CRITERION_LINES", None) if module else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
