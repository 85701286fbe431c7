import warnings

import pytest

from hestonvi.errors import CoefficientWarning


@pytest.fixture(autouse=True)
def _no_b1_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CoefficientWarning)
        yield
