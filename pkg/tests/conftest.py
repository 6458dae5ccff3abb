"""Shared test plumbing: the acceptance-criteria report.

Criterion tests record one PASS/FAIL line each; the terminal-summary hook
prints them after the run so they show up even under output capture.
"""

from contextlib import contextmanager

CRITERION_LINES = []


@contextmanager
def criterion(number, summary):
    try:
        yield
    except BaseException:
        CRITERION_LINES.append(f"CRITERION {number:02d} FAIL - {summary}")
        raise
    CRITERION_LINES.append(f"CRITERION {number:02d} PASS - {summary}")


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES):
            terminalreporter.write_line(line)
