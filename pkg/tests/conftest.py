"""Shared pytest fixtures and the acceptance scoreboard.

Acceptance tests record one line per criterion; the terminal summary replays
the scoreboard so pass/fail status is visible even when stdout is captured.
"""

from __future__ import annotations

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion_log():
    """Record and print a one-line pass/fail verdict for an acceptance criterion."""

    def log(number: int, name: str, ok: bool, detail: str = "") -> bool:
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {number:02d}: {name}"
        if detail:
            line += f" — {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
