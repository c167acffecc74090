import os

import hypothesis
import numpy as np
import pytest

from spectral.grid import GridSpec

np.seterr(all="warn")

hypothesis.settings.register_profile("lab", max_examples=20, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "lab"))


@pytest.fixture
def grid():
    return GridSpec(2, 32)


@pytest.fixture
def small_grid():
    return GridSpec(2, 16)
