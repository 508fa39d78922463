import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chcook import build_spectrum


@pytest.fixture
def sp8():
    return build_spectrum(1, 8)


@pytest.fixture
def sp32():
    return build_spectrum(1, 32)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
