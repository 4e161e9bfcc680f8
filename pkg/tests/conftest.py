import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def twisted():
    from randers_sphere.surface import make_surface
    return make_surface("twisted-sine", alpha=0.25)


@pytest.fixture
def round_sphere():
    from randers_sphere.surface import make_surface
    return make_surface("round")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
