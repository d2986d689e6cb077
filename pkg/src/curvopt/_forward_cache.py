from __future__ import annotations

import hashlib
import threading
from collections import OrderedDict
from typing import Any, Callable, TypeVar

import numpy as np

T = TypeVar("T")


def _hash_arrays(*arrays: np.ndarray) -> str:
    """Content hash (blake2b) over dtype, shape and raw bytes of each array."""
    h = hashlib.blake2b(digest_size=16)
    for arr in arrays:
        arr = np.ascontiguousarray(arr)
        h.update(arr.dtype.str.encode())
        h.update(repr(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


class ForwardCache:
    """Thread-safe bounded LRU store for forward-pass intermediates.

    Keys are content hashes of (parameters, sample indices), so a gradient or
    Hessian-vector pass at the same point reuses the activations computed by
    the preceding loss pass. Hit/miss counters are for tests and profiling.
    """

    def __init__(self, capacity: int = 32):
        if capacity < 0:
            raise ValueError("capacity must be non-negative")
        self.capacity = capacity
        self._data: OrderedDict[str, Any] = OrderedDict()
        self._lock = threading.RLock()
        self.hits = 0
        self.misses = 0

    make_key = staticmethod(_hash_arrays)

    def get(self, key: str) -> Any | None:
        with self._lock:
            value = self._data.get(key)
            if value is not None:
                self._data.move_to_end(key)
            return value

    def set(self, key: str, value: Any) -> None:
        if self.capacity == 0:
            return
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.capacity:
                self._data.popitem(last=False)

    def get_or_compute(self, key: str, compute: Callable[[], T]) -> T:
        cached = self.get(key)
        if cached is not None:
            with self._lock:
                self.hits += 1
            return cached
        value = compute()
        with self._lock:
            self.misses += 1
        self.set(key, value)
        return value

    def clear(self) -> None:
        with self._lock:
            self._data.clear()

    def __len__(self) -> int:
        with self._lock:
            return len(self._data)
