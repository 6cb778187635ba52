import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

_VERDICTS = []


@pytest.fixture
def verdict(request):
    """Record one acceptance criterion outcome, then assert it."""

    def record(ok: bool, detail: str):
        _VERDICTS.append((request.node.name, bool(ok), detail))
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _VERDICTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
