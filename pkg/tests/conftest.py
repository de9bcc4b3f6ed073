import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PAPER_SCALE = os.environ.get("RANN_PAPER_SCALE") == "1"


def pytest_collection_modifyitems(config, items):
    skip = pytest.mark.skip(reason="paper-scale run; set RANN_PAPER_SCALE=1")
    for item in items:
        if "paper_scale" in item.keywords and not PAPER_SCALE:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "VERDICTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
