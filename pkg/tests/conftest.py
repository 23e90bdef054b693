import numpy as np
import pytest

from streamtgn.config import Dims
from streamtgn.params import init_params


@pytest.fixture
def dims():
    return Dims(d_s=6, d_e=3, d_t=6, d_x=0, d_m=5, d_k=4, heads=2, layers=1)


@pytest.fixture
def params(dims):
    return init_params(12345, dims)


def random_params(seed, dims):
    """Parameters with randomized biases too (init leaves them zero)."""
    p = init_params(seed, dims)
    rng = np.random.default_rng(seed + 1)
    for name, t in p.tensors().items():
        if name.startswith("b_") and name != "b_pred":
            t[...] = rng.standard_normal(t.shape)
    p.b_pred = float(rng.standard_normal())
    return p
