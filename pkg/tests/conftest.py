import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slitwave.fields import make_grid


@pytest.fixture
def grid64():
    return make_grid(64, 64, 16.0, 16.0, -8.0, -8.0)


@pytest.fixture
def grid128():
    return make_grid(128, 128, 32.0, 32.0, -16.0, -16.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
