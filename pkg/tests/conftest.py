import pytest

_REPORT: dict = {}


@pytest.fixture(scope="session")
def acceptance_report():
    """Criterion id -> (passed, detail); printed after the run."""
    return _REPORT


def pytest_terminal_summary(terminalreporter):
    if not _REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_REPORT):
        ok, detail = _REPORT[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
