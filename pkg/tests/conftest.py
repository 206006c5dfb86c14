"""Shared fixtures: per-criterion pass/fail reporting for the acceptance suite.

Lines recorded through the ``acceptance`` fixture are echoed in a dedicated
terminal section after the run, so they stay visible even with captured output.
"""

import pytest

_lines = []


@pytest.fixture
def acceptance():
    """Returns check(criterion, description, ok): records one line, then asserts."""

    def check(criterion: int, description: str, ok: bool, detail: str = ""):
        verdict = "PASS" if ok else "FAIL"
        suffix = f" ({detail})" if detail else ""
        _lines.append(f"criterion {criterion:2d} {verdict}: {description}{suffix}")
        assert ok, f"criterion {criterion}: {description}{suffix}"

    return check


def pytest_terminal_summary(terminalreporter):
    if _lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_lines):
            terminalreporter.write_line(line)
