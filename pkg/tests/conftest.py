import pytest

# one line per acceptance criterion, filled in by tests/test_acceptance.py
CRITERIA: dict[int, str] = {}


def record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    CRITERIA[number] = line
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])


@pytest.fixture
def criterion():
    return record
