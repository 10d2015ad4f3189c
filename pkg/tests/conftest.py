import pytest

ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""
    def put(tag: str, ok: bool, detail: str) -> bool:
        ACCEPTANCE[tag] = f"{tag} {'PASS' if ok else 'FAIL'}  {detail}"
        print(ACCEPTANCE[tag])
        return ok
    return put


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for tag in sorted(ACCEPTANCE, key=lambda t: int(t[1:])):
            terminalreporter.write_line(ACCEPTANCE[tag])
