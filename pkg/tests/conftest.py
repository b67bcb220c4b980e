import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gldf.feeder_io import BUNDLED, load_bundled  # noqa: E402
from gldf.netmodel import build_index_maps  # noqa: E402
from gldf.ybus import build_system  # noqa: E402


class Feeder:
    def __init__(self, name, shunts=False):
        self.net = load_bundled(name, shunts=shunts)
        self.idx = build_index_maps(self.net)
        self.mats = build_system(self.net, self.idx)


_cache: dict = {}

# filled by the acceptance tests, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def feeder(name, shunts=False) -> Feeder:
    key = (name, shunts)
    if key not in _cache:
        _cache[key] = Feeder(name, shunts)
    return _cache[key]


@pytest.fixture(params=BUNDLED)
def bundled(request) -> Feeder:
    return feeder(request.param)


@pytest.fixture
def ieee13() -> Feeder:
    return feeder("ieee13")


@pytest.fixture
def ieee37() -> Feeder:
    return feeder("ieee37")


@pytest.fixture
def ieee123() -> Feeder:
    return feeder("ieee123")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
