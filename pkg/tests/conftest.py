import numpy as np
import pytest

from flexseason.kernel import FAMILIES, KernelSpec


@pytest.fixture(params=FAMILIES)
def kernel(request):
    return KernelSpec.from_name(request.param)


@pytest.fixture
def epa():
    return KernelSpec("epanechnikov")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
