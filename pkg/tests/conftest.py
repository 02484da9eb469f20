"""Collects one verdict line per acceptance criterion and prints them after the run."""
import pytest

_VERDICTS: dict[int, tuple[str, str]] = {}


@pytest.fixture
def verdict(request):
    """Call ``verdict(n, ok, detail)`` once per criterion; the test then asserts ``ok``."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _VERDICTS[number] = ("PASS" if ok else "FAIL", detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        status, detail = _VERDICTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")
