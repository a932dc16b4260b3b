import numpy as np
import pytest

from fracapprox.streams import PeriodicStream, RandomStream, make_rng, parse_stream


def test_periodic_stream_indexing():
    s = PeriodicStream((1,), (0, 1))
    assert s.take(0, 6) == (1, 0, 1, 0, 1, 0)
    assert s.take(3, 5) == (0, 1)
    assert s[4] == 1


def test_random_stream_is_restartable():
    a = RandomStream((0, 2), 42)
    first = a.take(0, 10000)
    assert a.take(5000, 5010) == first[5000:5010]
    b = RandomStream((0, 2), 42)
    # reading in a different order gives the same symbols
    assert b.take(9000, 9010) == first[9000:9010]
    assert b.take(0, 10000) == first
    assert set(first) == {0, 2}


def test_random_stream_seeds_and_keys_differ():
    assert RandomStream((0, 1), 1).take(0, 64) != RandomStream((0, 1), 2).take(0, 64)
    assert RandomStream((0, 1), 1, key=0).take(0, 64) != RandomStream((0, 1), 1, key=1).take(0, 64)


def test_weighted_stream_frequencies():
    s = RandomStream((0, 1), 3, weights=[0.25, 0.75])
    x = s.array(10**6)
    p = x.mean()
    se = np.sqrt(0.75 * 0.25 / x.size)
    assert abs(p - 0.75) <= 4 * se


def test_make_rng_deterministic():
    assert make_rng(7, 1, 2).integers(0, 1 << 30) == make_rng(7, 1, 2).integers(0, 1 << 30)


def test_parse_stream(cantor):
    s = parse_stream("periodic::02", cantor)
    assert s.take(0, 4) == (0, 1, 0, 1)
    s = parse_stream("rational:1/3", cantor)
    assert s.take(0, 3) == (0, 1, 1)
    assert parse_stream("random:5", cantor).take(0, 100) == RandomStream((0, 1), 5).take(0, 100)
    with pytest.raises(ValueError):
        parse_stream("bogus:1", cantor)
