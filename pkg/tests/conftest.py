import pytest

ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, ok, detail)``."""
    table = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number, ok, detail):
        table[number] = (bool(ok), detail)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash.get(ACCEPTANCE, {})
    if not table:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(table):
        ok, detail = table[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
