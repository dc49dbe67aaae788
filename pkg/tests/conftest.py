import pytest

_ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    """Store one acceptance verdict: ``record(key, ok, detail)``."""

    def _record(key, ok, detail):
        _ACCEPTANCE[str(key)] = (bool(ok), detail)
        print(f"criterion {key}: {'PASS' if ok else 'FAIL'} {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: (not k.isdigit(), int(k) if k.isdigit() else 0, k)):
        ok, detail = _ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
