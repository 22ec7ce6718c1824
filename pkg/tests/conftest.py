import warnings

import numpy as np
import pytest

from qnls.ground_state import petviashvili
from qnls.nonlinearity import builtin
from qnls.radial import DecayWarning, RadialGrid

# Grids on which the certified tolerances hold with margin.
CERT_GRIDS = {1: (4096, 40.0), 3: (8192, 40.0), 5: (32768, 32.0), 6: (4096, 40.0)}

_cache = {}


def solve(name, n, M=None, r_max=None, **kw):
    """Ground state of a builtin, memoised across the test session."""
    M0, R0 = CERT_GRIDS.get(n, (4096, 40.0))
    M, r_max = M or M0, r_max or R0
    key = (name, n, M, r_max, tuple(sorted(kw.items())))
    if key not in _cache:
        nl, p = builtin(name, n=n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DecayWarning)
            _cache[key] = petviashvili(RadialGrid(n, M, r_max), p, nl, **kw)
    return _cache[key]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def scalar_gs():
    return solve("scalar-cubic", 1)
