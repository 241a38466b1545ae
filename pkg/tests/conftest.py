import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def criterion():
    """``criterion(n, ok, text)`` prints and records one pass/fail line."""

    def record(n: int, ok: bool, text: str) -> bool:
        line = f"[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {text}"
        print(line)
        _ACCEPTANCE.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
