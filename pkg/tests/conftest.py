import numpy as np
import pytest

from oahash.imaging import GrayImage


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_image(rng, width, height, levels=256):
    return GrayImage(rng.integers(0, levels, size=(height, width)).astype(np.uint8))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
