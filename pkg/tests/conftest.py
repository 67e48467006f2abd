import pytest

# criterion id -> list of (part, ok, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record(criterion, part, ok, detail=""):
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(ok), detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[crit]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        tr.write_line(f"{status}  C{crit}")
        for part, ok, detail in parts:
            tr.write_line(f"        [{'ok' if ok else 'FAILED'}] {part}: {detail}")


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240607)
