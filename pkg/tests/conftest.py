"""Collects one verdict line per acceptance criterion and prints them at the end."""

VERDICTS = {}


def record(number, ok, detail):
    VERDICTS[number] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(VERDICTS):
        ok, detail = VERDICTS[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}")
