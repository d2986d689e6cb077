"""
Unit tests for the forward-pass LRU cache.
"""

import threading

import numpy as np
import pytest

from curvopt._forward_cache import ForwardCache


class TestKeys:
    def test_same_content_same_key(self):
        """Equal arrays hash to the same key."""
        a = ForwardCache.make_key(np.array([1.0, 2.0]), np.array([0, 1]))
        b = ForwardCache.make_key(np.array([1.0, 2.0]), np.array([0, 1]))
        assert a == b

    def test_indices_change_key(self):
        """Reordered indices give a different key."""
        x = np.array([1.0, 2.0])
        assert ForwardCache.make_key(x, np.array([0, 1])) != ForwardCache.make_key(x, np.array([1, 0]))

    def test_dtype_changes_key(self):
        """Same values in another dtype give a different key."""
        assert ForwardCache.make_key(np.zeros(2)) != ForwardCache.make_key(np.zeros(2, dtype=np.float32))


class TestLRU:
    def test_hit_and_miss_counters(self):
        """A second lookup is a hit and skips the compute callback."""
        cache = ForwardCache(4)
        calls = []
        cache.get_or_compute("k", lambda: calls.append(1) or "v")
        assert cache.get_or_compute("k", lambda: calls.append(1) or "w") == "v"
        assert calls == [1]
        assert (cache.hits, cache.misses) == (1, 1)

    def test_evicts_least_recently_used(self):
        """Overflow evicts the entry touched longest ago."""
        cache = ForwardCache(2)
        cache.set("a", 1)
        cache.set("b", 2)
        cache.get("a")
        cache.set("c", 3)
        assert cache.get("b") is None
        assert cache.get("a") == 1
        assert cache.get("c") == 3
        assert len(cache) == 2

    def test_zero_capacity_stores_nothing(self):
        """Capacity 0 disables storage and counts every lookup as a miss."""
        cache = ForwardCache(0)
        cache.get_or_compute("k", lambda: 1)
        cache.get_or_compute("k", lambda: 1)
        assert len(cache) == 0
        assert cache.misses == 2

    def test_clear(self):
        """clear() empties the cache."""
        cache = ForwardCache(3)
        cache.set("a", 1)
        cache.clear()
        assert len(cache) == 0

    def test_negative_capacity(self):
        """Negative capacity is rejected."""
        with pytest.raises(ValueError):
            ForwardCache(-1)

    def test_concurrent_access(self):
        """Concurrent get_or_compute keeps the bound and counts every lookup."""
        cache = ForwardCache(8)

        def worker(offset):
            for i in range(200):
                key = f"k{(i + offset) % 16}"
                assert cache.get_or_compute(key, lambda: key) == key

        threads = [threading.Thread(target=worker, args=(t,)) for t in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(cache) <= 8
        assert cache.hits + cache.misses == 800
