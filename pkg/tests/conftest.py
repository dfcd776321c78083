"""Shared pytest configuration: collects acceptance verdicts for the terminal summary."""

ACCEPTANCE = []


def record(number, title, ok, detail):
    """Store and print one acceptance verdict line."""
    line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
