import sys

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("wickflow", max_examples=40, deadline=None)
settings.load_profile("wickflow")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.VERDICTS:
            terminalreporter.write_line(line)
