import numpy as np

from condflow import rng
from condflow.stats import ks_two_sample


def test_draws_are_pure_functions_of_keys():
    ids = np.arange(1000, dtype=np.int64)
    keys = rng.path_keys(42, ids)
    a = rng.normals(keys, 7)
    b = rng.normals(rng.path_keys(42, ids), 7)
    np.testing.assert_array_equal(a, b)


def test_chunking_does_not_change_draws():
    ids = np.arange(256, dtype=np.int64)
    keys = rng.path_keys(9, ids)
    whole = rng.normals(keys, 3)
    parts = np.concatenate([
        rng.normals(rng.path_keys(9, ids[:100]), 3),
        rng.normals(rng.path_keys(9, ids[100:]), 3),
    ])
    np.testing.assert_array_equal(whole, parts)


def test_streams_and_steps_decorrelate():
    keys = rng.path_keys(5, np.arange(4096, dtype=np.int64))
    a = rng.normals(keys, 0, stream=0)
    b = rng.normals(keys, 0, stream=1)
    c = rng.normals(keys, 1, stream=0)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.05
    assert abs(np.corrcoef(a, c)[0, 1]) < 0.05


def test_seed_changes_draws():
    ids = np.arange(64, dtype=np.int64)
    a = rng.normals(rng.path_keys(1, ids), 0)
    b = rng.normals(rng.path_keys(2, ids), 0)
    assert not np.array_equal(a, b)


def test_uniforms_in_open_interval():
    keys = rng.path_keys(11, np.arange(100_000, dtype=np.int64))
    u = rng.uniforms(keys, 0, stream=2)
    assert np.all(u > 0.0) and np.all(u < 1.0)
    assert abs(u.mean() - 0.5) < 0.005


def test_two_streams_look_standard_normal():
    keys = rng.path_keys(123, np.arange(10_000, dtype=np.int64))
    xs = rng.normals(keys, 0)
    ys = rng.normals(keys, 1)
    result = ks_two_sample(xs, ys)
    assert result.passed
    assert abs(xs.mean()) < 4.0 / np.sqrt(xs.size)
    assert abs(xs.std() - 1.0) < 0.03
