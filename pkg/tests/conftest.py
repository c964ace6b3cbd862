import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def gray16(rng):
    from pixelveil.image import Image

    return Image(rng.integers(0, 256, (16, 16)).astype(float))


@pytest.fixture
def rgb32(rng):
    from pixelveil.image import Image

    return Image(rng.integers(0, 256, (32, 32, 3)).astype(float))
