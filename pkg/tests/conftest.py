from collections import defaultdict

import pytest

_VERDICTS = defaultdict(list)


class Ledger:
    def record(self, number, part, ok, detail=""):
        _VERDICTS[number].append((part, bool(ok), detail))
        print(f"criterion {number} [{part}]: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
        return ok


@pytest.fixture(scope="session")
def criteria():
    return Ledger()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        parts = _VERDICTS[number]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{name} {'ok' if good else 'FAILED'}{' (' + d + ')' if d else ''}" for name, good, d in parts)
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
