import numpy as np
import pytest

from streamtgn.config import ConfigError, Dims
from streamtgn.params import frequency_ladder, init_params, load_params, save_params


def test_same_seed_bit_identical():
    dims = Dims()
    a = init_params(99, dims)
    b = init_params(99, dims)
    for name, t in a.tensors().items():
        np.testing.assert_array_equal(t, b.tensors()[name])


def test_different_seed_differs():
    dims = Dims()
    a = init_params(1, dims)
    b = init_params(2, dims)
    assert not np.array_equal(a.w_msg_src, b.w_msg_src)


def test_degenerate_ladder():
    assert frequency_ladder(2).tolist() == [1.0]


def test_four_dim_ladder():
    np.testing.assert_allclose(frequency_ladder(4), [1.0, 1e-4], rtol=0, atol=0)


def test_ladder_span():
    w = frequency_ladder(10)
    assert w[0] == 1.0
    np.testing.assert_allclose(w[-1], 1e-4)
    ratios = w[1:] / w[:-1]
    np.testing.assert_allclose(ratios, ratios[0])  # geometric


def test_glorot_bounds_and_zero_biases():
    dims = Dims(d_s=8, d_e=4, d_t=8, d_m=8)
    p = init_params(5, dims)
    a = np.sqrt(6.0 / (dims.msg_in + dims.d_m))
    assert np.max(np.abs(p.w_msg_src)) <= a
    assert np.all(p.b_msg_src == 0) and np.all(p.b_z == 0)
    assert p.b_pred == 0.0


def test_odd_time_dim_rejected():
    with pytest.raises(ConfigError):
        init_params(0, Dims(d_t=5))


def test_save_load_roundtrip_value_exact(tmp_path):
    dims = Dims(d_s=6, d_e=3, d_t=6, d_m=5, d_k=4, heads=2, layers=2)
    p = init_params(123, dims)
    p.b_pred = 0.1234567890123456789
    path = tmp_path / "params.txt"
    save_params(p, str(path))
    q = load_params(str(path))
    assert q.dims == dims
    for name, t in p.tensors().items():
        np.testing.assert_array_equal(t, q.tensors()[name], err_msg=name)
    assert q.b_pred == p.b_pred


def test_save_is_deterministic(tmp_path):
    p = init_params(7, Dims())
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    save_params(p, str(a))
    save_params(p, str(b))
    assert a.read_bytes() == b.read_bytes()
