import pytest

from oracles import dataset


@pytest.fixture
def worked_example():
    """One author ranks p1 > p3 > p2 > p4 over scores (8, 7, 4, 3)."""
    return dataset({"p1": 8, "p2": 7, "p3": 4, "p4": 3}, {"a1": [["p1"], ["p3"], ["p2"], ["p4"]]})


_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[n])
