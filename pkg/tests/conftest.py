import pytest

# criterion id -> (passed, detail); filled by test_acceptance
CRITERIA = {}


def record(cid, passed, detail=""):
    CRITERIA[cid] = (bool(passed), detail)
    print(f"[criterion {cid}] {'PASS' if passed else 'FAIL'} {detail}")


@pytest.fixture
def criterion():
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(CRITERIA, key=lambda c: int(c)):
        ok, detail = CRITERIA[cid]
        terminalreporter.write_line(f"criterion {cid:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
