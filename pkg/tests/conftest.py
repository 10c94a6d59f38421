import sys

CRITERIA = range(1, 10)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None:
        return
    terminalreporter.section("acceptance criteria")
    for num in CRITERIA:
        terminalreporter.write_line(mod.RESULTS.get(num, f"[FAIL] criterion {num}: did not run to completion"))
