import json
import os
from fractions import Fraction

import pytest

from sawlab import cache
from sawlab.errors import CacheError


def _keys(count):
    return [cache.cache_key("zd2-nn", "c", n) for n in range(count)]


def test_keys_depend_on_every_coordinate():
    base = cache.cache_key("zd2-nn", "c", 10)
    assert base != cache.cache_key("zd3-nn", "c", 10)
    assert base != cache.cache_key("zd2-nn", "b", 10)
    assert base != cache.cache_key("zd2-nn", "c", 10, lam=Fraction(1, 2))
    assert base == cache.cache_key("zd2-nn", "c", 10, lam=1)
    assert cache.domain_hash([(0, 1), (0, 0)]) == cache.domain_hash([(0, 0), (0, 1)])


def test_exact_values_survive_encoding():
    assert cache.encode_value(Fraction(1, 2)) == "1/2"
    assert cache.encode_value(Fraction(4, 2)) == "2"
    assert cache.decode_value("2374444") == 2374444
    assert cache.decode_value("-3/6") == Fraction(-1, 2)


def test_get_and_put(tmp_path):
    key = _keys(1)[0]
    with cache.ResultCache(str(tmp_path)) as results:
        assert results.get(key) is None
        results.put(key, {"counts": ["1", "4", "12"]})
        assert results.get(key) == {"counts": ["1", "4", "12"]}
        assert (results.hits, results.misses) == (1, 1)
        assert os.path.exists(results.path_for(key))
    assert not os.listdir(tmp_path / "jobs")


def test_unreadable_entries_are_misses(tmp_path):
    key = _keys(1)[0]
    results = cache.ResultCache(str(tmp_path))
    path = results.path_for(key)
    os.makedirs(os.path.dirname(path))
    with open(path, "w") as broken:
        broken.write("{not json")
    assert results.get(key) is None
    assert results.misses == 1
    results.close()


def test_unusable_cache_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(CacheError):
        cache.ResultCache(str(blocker))
    with pytest.raises(CacheError):
        cache.cache_gc(str(tmp_path / "missing"), 0)


def _fill(results, keys):
    for n, key in enumerate(keys):
        results.put(key, {"value": str(n)})
        os.utime(results.path_for(key), (1000 + n, 1000 + n))


def test_gc_evicts_least_recently_used(tmp_path):
    keys = _keys(3)
    with cache.ResultCache(str(tmp_path)) as results:
        _fill(results, keys)
        size = os.path.getsize(results.path_for(keys[0]))
    summary = cache.cache_gc(str(tmp_path), size)
    assert summary.entries_before == 3
    assert summary.bytes_before == 3 * size
    assert summary.evicted == 2
    assert summary.bytes_after == size
    assert summary.pinned == 0
    survivors = [key for key in keys if os.path.exists(os.path.join(tmp_path, key[:2], f"{key}.json"))]
    assert survivors == [keys[2]]


def test_gc_keeps_entries_of_running_jobs(tmp_path):
    keys = _keys(3)
    with cache.ResultCache(str(tmp_path)) as results:
        _fill(results, keys)
        with open(os.path.join(tmp_path, "jobs", "999999999.json"), "w") as stale:
            json.dump([], stale)
        summary = cache.cache_gc(str(tmp_path), 0)
        assert summary.evicted == 0
        assert summary.pinned == 3
        assert all(os.path.exists(results.path_for(key)) for key in keys)
    assert not os.path.exists(os.path.join(tmp_path, "jobs", "999999999.json"))
