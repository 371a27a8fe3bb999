import pytest

_checks = {}


@pytest.fixture(scope="session")
def record():
    """Store a criterion's checks for the end-of-run summary."""

    def _record(criterion, checks):
        _checks[criterion] = list(checks)
        for c in checks:
            print(c.line())
        return checks

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _checks:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_checks, key=lambda c: int(c)):
        checks = _checks[crit]
        ok = all(c.passed for c in checks)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} ({sum(c.passed for c in checks)}/{len(checks)} checks)")
    tr.write_line("")
    for crit in sorted(_checks, key=lambda c: int(c)):
        for c in _checks[crit]:
            tr.write_line(c.line())
