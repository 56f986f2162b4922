import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

from semcast.config import default_scenario  # noqa: E402


@pytest.fixture
def make_scenario():
    def build(intent, distances, **kw):
        return default_scenario(np.asarray(intent), np.asarray(distances, dtype=float), **kw)
    return build


_VERDICTS = []


@pytest.fixture
def verdict(request):
    """Record one acceptance criterion as a PASS/FAIL line, then assert it."""
    reporter = request.config.pluginmanager.getplugin("terminalreporter")

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _VERDICTS.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
