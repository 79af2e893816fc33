"""Shared pytest wiring: the acceptance-criteria summary table.

The acceptance tests record one (number, ok, detail) entry apiece; printing
them from a terminal-summary hook keeps the measured margins visible in the
ordinary captured run, not just on failure.
"""

CRITERIA = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(CRITERIA):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {status} - {detail}")
