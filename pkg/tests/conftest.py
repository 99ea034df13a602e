import numpy as np
import pytest

from savsddp import lp, sddp

# Every optimal LP solved anywhere in the suite is checked for strong duality
# at 1e-6; a failure raises inside the solve and fails the test.
lp.set_verify_all(True)

MONO_TOL = 1e-9

_runs = {"count": 0, "violations": []}
RESULTS = {}


@sddp.add_observer
def _check_monotone(problem, history):
    lower = history.column("lower")
    _runs["count"] += 1
    drops = np.diff(lower)
    bad = drops < -MONO_TOL * (1.0 + np.abs(lower[:-1]))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        msg = f"lower bound fell from {lower[i]!r} to {lower[i + 1]!r} at iteration {i + 2}"
        _runs["violations"].append(msg)
        raise AssertionError(msg)


@pytest.fixture
def training_runs():
    return _runs


@pytest.fixture
def record():
    """``record(n, passed, detail)`` stores an acceptance line for the summary."""
    def _record(n, passed, detail):
        RESULTS[n] = (bool(passed), detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    stats = lp.verification_stats()
    RESULTS[2] = (stats["failed"] == 0 and stats["checked"] > 0,
                  f"{stats['checked']} optimal solves verified, {stats['failed']} failed")
    RESULTS[4] = (not _runs["violations"] and _runs["count"] > 0,
                  f"{_runs['count']} training runs, "
                  f"{len(_runs['violations'])} with a falling lower bound")
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
