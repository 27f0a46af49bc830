import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from diosum.cf import IrrationalSpec

# keep the suite deterministic run to run
settings.register_profile("deterministic", derandomize=True)
settings.load_profile("deterministic")


@pytest.fixture
def phi():
    return IrrationalSpec.phi()


@pytest.fixture
def sqrt2():
    return IrrationalSpec.sqrt2()


@pytest.fixture
def e_const():
    return IrrationalSpec.e()
