import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fdotpeak import PhysicalParams, SdPair, Target  # noqa: E402


@pytest.fixture
def params():
    return PhysicalParams()


@pytest.fixture
def pair():
    return SdPair(x_s=[6, 10, 0], x_d=[14, 10, 0])


@pytest.fixture
def target():
    return Target([10, 10, 20])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
