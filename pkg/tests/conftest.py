import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_LINES: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    _LINES[criterion] = f"{'PASS' if ok else 'FAIL'} criterion {criterion:2d}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_LINES):
        terminalreporter.write_line(_LINES[k])
