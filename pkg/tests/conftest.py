import numpy as np
import pytest

from wsbm._accel import HAVE_NUMBA
from wsbm.core import Network

BACKENDS = ["numpy", "numba"] if HAVE_NUMBA else ["numpy"]


def random_network(n, seed, kind="normal"):
    rng = np.random.default_rng(seed)
    if kind == "normal":
        W = rng.normal(size=(n, n))
    elif kind == "integer":
        W = rng.integers(0, 3, size=(n, n)).astype(float)
    elif kind == "binary":
        W = (rng.random((n, n)) < 0.4).astype(float)
    else:
        raise ValueError(kind)
    W = np.triu(W, 1)
    return Network(W + W.T)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param
