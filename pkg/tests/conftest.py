import pytest

_ACCEPTANCE = []


@pytest.fixture
def report():
    """Record one acceptance line; the lines are printed in the terminal summary."""

    def _report(number, ok, text):
        _ACCEPTANCE.append((number, ok, text))
        print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {text}")
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, text in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {text}")
