import pytest

_VERDICTS: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record a one-line verdict per acceptance criterion.

    Usage: ``criterion(n, ok, detail)``; the line is also printed, and the
    full table is repeated in the terminal summary.
    """

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[number])
