import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def report():
    """Collects one summary line per acceptance criterion."""

    def add(tag, passed, detail):
        line = f"{tag} {'PASS' if passed else 'FAIL'} {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return add


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[0][1:])):
        terminalreporter.write_line(line)
