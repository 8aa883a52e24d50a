import numpy as np
import pytest

from urnlab.rng import philox4x64, uniforms


def _numpy_block(counter, key):
    # numpy bumps the counter before each block, so start one below
    c = np.array(counter, dtype=np.uint64) - np.array([1, 0, 0, 0], dtype=np.uint64)
    bg = np.random.Philox(counter=c, key=np.array(key, dtype=np.uint64))
    return [int(w) for w in bg.random_raw(4)]


@pytest.mark.parametrize("counter,key", [
    ((1, 0, 0, 0), (0, 0)),
    ((7, 3, 0, 0), (12345, 2)),
    ((2**64 - 1, 9, 5, 1), (2**63 + 11, 2**64 - 1)),
])
def test_matches_numpy_philox(counter, key):
    got = philox4x64(*map(np.uint64, counter), *map(np.uint64, key))
    assert [int(w) for w in got] == _numpy_block(counter, key)


def test_uniforms_range_and_determinism():
    a = np.empty(10)
    b = np.empty(10)
    uniforms(a, np.uint64(3), np.uint64(4), 17, 10)
    uniforms(b, np.uint64(3), np.uint64(4), 17, 10)
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a < 1))
    c = np.empty(10)
    uniforms(c, np.uint64(3), np.uint64(5), 17, 10)
    assert not np.array_equal(a, c)
