from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def binary():
    from predlab.measure import StateSpace
    return StateSpace.finite([0.0, 1.0])


@pytest.fixture
def rng_np():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, checks: dict[str, bool], detail: str) -> None:
        ok = all(checks.values())
        failed = ", ".join(k for k, v in checks.items() if not v)
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        if failed:
            line += f"  [failed: {failed}]"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
