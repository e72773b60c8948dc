import time
from contextlib import contextmanager

import pytest

ACCEPTANCE_LINES = []


@contextmanager
def criterion(number, title, budget):
    """Time a criterion, record one PASS/FAIL line, and enforce its runtime budget."""
    t0 = time.perf_counter()
    detail = {}
    try:
        yield detail
        elapsed = time.perf_counter() - t0
        detail["time"] = f"{elapsed:.2f}s (< {budget}s)"
        assert elapsed < budget, f"criterion {number} took {elapsed:.1f}s, budget {budget}s"
    except BaseException:
        ACCEPTANCE_LINES.append(f"FAIL  criterion {number}: {title}  {_fmt(detail)}")
        raise
    ACCEPTANCE_LINES.append(f"PASS  criterion {number}: {title}  {_fmt(detail)}")


def _fmt(detail):
    return "; ".join(f"{k}={v}" for k, v in detail.items())


@pytest.fixture
def acceptance():
    return criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
